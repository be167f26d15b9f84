#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <utility>
#include <vector>

#include "mixmeter/rng.hpp"
#include "mixmeter/stereo_meters.hpp"
#include "test_util.hpp"

using mixmeter::box_count;
using mixmeter::correlation;
using mixmeter::cross_correlation_peak;
using mixmeter::panning_deg;

namespace {

/// Enumeration oracle: distinct grid cells via a set, binning per the
/// documented rule floor((v + 1) * 10) clamped into 0..19.
int box_count_oracle(const std::vector<double>& left, const std::vector<double>& right) {
    std::set<std::pair<int, int>> cells;
    for (std::size_t i = 0; i < left.size(); ++i) {
        auto bin = [](double v) {
            int c = static_cast<int>(std::floor((v + 1.0) * 10.0));
            return std::clamp(c, 0, 19);
        };
        cells.emplace(bin(left[i]), bin(right[i]));
    }
    return static_cast<int>(cells.size());
}

}  // namespace

TEST_CASE("box_count of a constant point is one cell") {
    std::vector<double> x(4096, 0.05);
    CHECK(box_count(x, x) == 1);
}

TEST_CASE("box_count of a full-scale mono sine matches the enumeration oracle") {
    auto x = testutil::sine(1000.0, 44100, 4096);
    CHECK(box_count(x, x) == box_count_oracle(x, x));
    CHECK(box_count(x, x) == 20);
}

TEST_CASE("box_count matches the oracle on assorted signals") {
    mixmeter::Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> l(512), r(512);
        for (std::size_t i = 0; i < l.size(); ++i) {
            l[i] = rng.uniform(-1.2, 1.2);  // includes out-of-range points
            r[i] = rng.uniform(-1.2, 1.2);
        }
        CHECK(box_count(l, r) == box_count_oracle(l, r));
    }
}

TEST_CASE("box_count clamps boundary and out-of-range samples to border cells") {
    std::vector<double> l = {1.0, -1.0};
    std::vector<double> r = {1.0, -1.0};
    CHECK(box_count(l, r) == 2);

    std::vector<double> wild_l = {1.5, 1.0};
    std::vector<double> wild_r = {0.95, 0.95};
    CHECK(box_count(wild_l, wild_r) == 1);
}

TEST_CASE("box_count of broadband noise fills most of the grid") {
    mixmeter::Rng rng(77);
    std::vector<double> l(4096), r(4096);
    for (std::size_t i = 0; i < l.size(); ++i) {
        l[i] = rng.uniform(-1.0, 1.0);
        r[i] = rng.uniform(-1.0, 1.0);
    }
    const int count = box_count(l, r);
    CHECK(count >= 350);
    CHECK(count <= 400);
}

TEST_CASE("panning of centered material is 45 degrees") {
    auto x = testutil::sine(1000.0, 44100, 4096);
    CHECK(panning_deg(x, x) == doctest::Approx(45.0).epsilon(1e-9));
}

TEST_CASE("panning of one-sided material hits the rails") {
    auto x = testutil::sine(1000.0, 44100, 4096);
    std::vector<double> zero(4096, 0.0);
    CHECK(panning_deg(x, zero) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(panning_deg(zero, x) == doctest::Approx(90.0).epsilon(1e-9));
}

TEST_CASE("panning skips silent sample pairs") {
    std::vector<double> l = {1.0, 0.0};
    std::vector<double> r = {1.0, 0.0};
    CHECK(panning_deg(l, r) == doctest::Approx(45.0).epsilon(1e-9));
}

TEST_CASE("panning of silence defaults to center") {
    std::vector<double> zero(128, 0.0);
    CHECK(panning_deg(zero, zero) == 45.0);
}

TEST_CASE("panning swap symmetry maps to 90 minus pan") {
    mixmeter::Rng rng(13);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> l(2048), r(2048);
        for (std::size_t i = 0; i < l.size(); ++i) {
            l[i] = rng.uniform(-1.0, 1.0);
            r[i] = 0.4 * rng.uniform(-1.0, 1.0);
        }
        CHECK(panning_deg(l, r) + panning_deg(r, l) ==
              doctest::Approx(90.0).epsilon(1e-12));
    }
}

TEST_CASE("correlation of identical and inverted channels is exact") {
    auto x = testutil::sine(997.0, 44100, 4096, 0.8);
    CHECK(std::abs(correlation(x, x) - 1.0) < 1e-9);
    std::vector<double> neg(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
    CHECK(std::abs(correlation(x, neg) + 1.0) < 1e-9);
}

TEST_CASE("correlation is invariant to positive affine maps") {
    mixmeter::Rng rng(31);
    std::vector<double> l(1024), r(1024);
    for (std::size_t i = 0; i < l.size(); ++i) {
        l[i] = rng.normal();
        r[i] = 0.3 * l[i] + 0.7 * rng.normal();
    }
    std::vector<double> scaled(l.size());
    for (std::size_t i = 0; i < l.size(); ++i) scaled[i] = 2.0 * l[i] + 0.1;
    CHECK(correlation(scaled, r) == doctest::Approx(correlation(l, r)).epsilon(1e-9));
}

TEST_CASE("correlation of a constant channel is zero") {
    std::vector<double> flat(256, 0.5);
    auto x = testutil::sine(1000.0, 44100, 256);
    CHECK(correlation(flat, x) == 0.0);
    CHECK(correlation(x, flat) == 0.0);
    CHECK(correlation(flat, flat) == 0.0);
}

TEST_CASE("correlation of independent noise stays near zero") {
    for (int window = 0; window < 100; ++window) {
        mixmeter::Rng rng(1000 + static_cast<std::uint64_t>(window));
        std::vector<double> l(4096), r(4096);
        for (std::size_t i = 0; i < l.size(); ++i) {
            l[i] = rng.uniform(-1.0, 1.0);
            r[i] = rng.uniform(-1.0, 1.0);
        }
        CHECK(std::abs(correlation(l, r)) < 0.08);
    }
}

TEST_CASE("cross_correlation_peak finds aligned impulses at any lag") {
    std::vector<double> l(64, 0.0), r(64, 0.0);
    l[10] = 1.0;
    r[10] = 1.0;
    CHECK(cross_correlation_peak(l, r) == doctest::Approx(1.0 / 64.0).epsilon(1e-12));

    std::fill(r.begin(), r.end(), 0.0);
    r[15] = 1.0;  // same energy, lag 5
    CHECK(cross_correlation_peak(l, r) == doctest::Approx(1.0 / 64.0).epsilon(1e-12));
}

TEST_CASE("cross_correlation_peak of silence is zero") {
    std::vector<double> zero(32, 0.0);
    CHECK(cross_correlation_peak(zero, zero) == 0.0);
}
