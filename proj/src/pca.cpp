#include "mixmeter/pca.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace mixmeter {
namespace {

constexpr double kScaleFloor = 1e-12;  // below this a column counts as constant

/// Cyclic Jacobi eigensolver for a symmetric matrix (row-major d x d).
/// Rotations zero each off-diagonal pair in turn; V accumulates the
/// eigenvectors as columns.
void jacobi_eigen(std::vector<double>& A, std::vector<double>& V, std::size_t d) {
    V.assign(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) V[i * d + i] = 1.0;
    if (d < 2) return;

    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) off += std::abs(A[p * d + q]);
        }
        if (off == 0.0) return;
        double scale = 0.0;
        for (std::size_t i = 0; i < d; ++i) scale += std::abs(A[i * d + i]);
        if (off <= 1e-15 * std::max(scale, 1.0)) return;

        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                const double apq = A[p * d + q];
                if (apq == 0.0) continue;
                const double app = A[p * d + p];
                const double aqq = A[q * d + q];
                const double tau = (aqq - app) / (2.0 * apq);
                // Smaller-magnitude root keeps rotations under 45 degrees.
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                for (std::size_t i = 0; i < d; ++i) {
                    const double aip = A[i * d + p];
                    const double aiq = A[i * d + q];
                    A[i * d + p] = c * aip - s * aiq;
                    A[i * d + q] = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < d; ++i) {
                    const double api = A[p * d + i];
                    const double aqi = A[q * d + i];
                    A[p * d + i] = c * api - s * aqi;
                    A[q * d + i] = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < d; ++i) {
                    const double vip = V[i * d + p];
                    const double viq = V[i * d + q];
                    V[i * d + p] = c * vip - s * viq;
                    V[i * d + q] = s * vip + c * viq;
                }
            }
        }
    }
}

}  // namespace

PcaModel pca_fit(const std::vector<std::vector<double>>& X, std::size_t n_components) {
    if (X.size() < 2) throw std::invalid_argument("pca_fit: need at least 2 rows");
    const std::size_t n = X.size();
    const std::size_t d = X[0].size();
    if (d == 0) throw std::invalid_argument("pca_fit: zero-width rows");
    for (const auto& row : X) {
        if (row.size() != d) throw std::invalid_argument("pca_fit: ragged rows");
    }
    const std::size_t k = std::min(n_components, d);
    if (k == 0) throw std::invalid_argument("pca_fit: zero components requested");

    PcaModel model;
    model.mean.assign(d, 0.0);
    model.scale.assign(d, 1.0);
    for (const auto& row : X) {
        for (std::size_t j = 0; j < d; ++j) model.mean[j] += row[j];
    }
    for (auto& m : model.mean) m /= static_cast<double>(n);

    std::vector<double> var(d, 0.0);
    for (const auto& row : X) {
        for (std::size_t j = 0; j < d; ++j) {
            const double v = row[j] - model.mean[j];
            var[j] += v * v;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        const double sigma = std::sqrt(var[j] / static_cast<double>(n));
        model.scale[j] = sigma > kScaleFloor ? sigma : 1.0;
    }

    // Standardized rows, then the population covariance matrix.
    std::vector<double> Z(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            Z[i * d + j] = (X[i][j] - model.mean[j]) / model.scale[j];
        }
    }
    std::vector<double> cov(d * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* zi = &Z[i * d];
        for (std::size_t a = 0; a < d; ++a) {
            const double za = zi[a];
            if (za == 0.0) continue;
            for (std::size_t b = a; b < d; ++b) cov[a * d + b] += za * zi[b];
        }
    }
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a; b < d; ++b) {
            const double v = cov[a * d + b] / static_cast<double>(n);
            cov[a * d + b] = v;
            cov[b * d + a] = v;
        }
    }

    std::vector<double> V;
    jacobi_eigen(cov, V, d);

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return cov[a * d + a] > cov[b * d + b];
    });

    model.components.resize(k, std::vector<double>(d));
    model.explained_variance.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        const std::size_t col = order[c];
        model.explained_variance[c] = cov[col * d + col];
        auto& comp = model.components[c];
        for (std::size_t j = 0; j < d; ++j) comp[j] = V[j * d + col];
        // Sign convention: the largest-magnitude entry is positive.
        std::size_t arg = 0;
        for (std::size_t j = 1; j < d; ++j) {
            if (std::abs(comp[j]) > std::abs(comp[arg])) arg = j;
        }
        if (comp[arg] < 0.0) {
            for (auto& v : comp) v = -v;
        }
    }
    return model;
}

std::vector<double> pca_transform(const PcaModel& model, std::span<const double> x) {
    const std::size_t d = model.in_dim();
    if (x.size() != d) throw std::invalid_argument("pca_transform: dimension mismatch");
    std::vector<double> z(d);
    for (std::size_t j = 0; j < d; ++j) {
        z[j] = (x[j] - model.mean[j]) / model.scale[j];
    }
    std::vector<double> out(model.out_dim(), 0.0);
    for (std::size_t c = 0; c < model.out_dim(); ++c) {
        const auto& comp = model.components[c];
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += comp[j] * z[j];
        out[c] = acc;
    }
    return out;
}

std::vector<std::vector<double>> pca_transform(const PcaModel& model,
                                               const std::vector<std::vector<double>>& X) {
    std::vector<std::vector<double>> out;
    out.reserve(X.size());
    for (const auto& row : X) out.push_back(pca_transform(model, row));
    return out;
}

void write_pca(std::ostream& os, const PcaModel& model) {
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << ' ' << buf;
    };
    os << "pca_dims " << model.in_dim() << ' ' << model.out_dim() << '\n';
    os << "pca_mean";
    for (double v : model.mean) put(v);
    os << '\n';
    os << "pca_scale";
    for (double v : model.scale) put(v);
    os << '\n';
    os << "pca_variance";
    for (double v : model.explained_variance) put(v);
    os << '\n';
    for (std::size_t c = 0; c < model.out_dim(); ++c) {
        os << "pca_component " << c;
        for (double v : model.components[c]) put(v);
        os << '\n';
    }
}

PcaModel read_pca(std::istream& is) {
    auto expect = [&](const char* keyword) {
        std::string word;
        if (!(is >> word) || word != keyword) {
            throw std::runtime_error(std::string("model file: expected ") + keyword);
        }
    };
    PcaModel model;
    std::size_t d = 0, k = 0;
    expect("pca_dims");
    if (!(is >> d >> k)) throw std::runtime_error("model file: bad pca_dims");
    auto read_row = [&](const char* keyword, std::vector<double>& row, std::size_t len) {
        expect(keyword);
        row.resize(len);
        for (auto& v : row) {
            if (!(is >> v)) throw std::runtime_error("model file: truncated pca row");
        }
    };
    read_row("pca_mean", model.mean, d);
    read_row("pca_scale", model.scale, d);
    read_row("pca_variance", model.explained_variance, k);
    model.components.resize(k, std::vector<double>(d));
    for (std::size_t c = 0; c < k; ++c) {
        expect("pca_component");
        std::size_t index = 0;
        if (!(is >> index) || index != c) {
            throw std::runtime_error("model file: pca components out of order");
        }
        for (auto& v : model.components[c]) {
            if (!(is >> v)) throw std::runtime_error("model file: truncated pca component");
        }
    }
    return model;
}

}  // namespace mixmeter
