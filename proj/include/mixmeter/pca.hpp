#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace mixmeter {

/// Principal component analysis on z-scored data. Standardization uses
/// population statistics; constant columns keep scale 1 so they map to 0.
/// Components are rows, ordered by decreasing eigenvalue, each signed so
/// its largest-magnitude entry is positive.
struct PcaModel {
    std::vector<double> mean;                  // d
    std::vector<double> scale;                 // d
    std::vector<std::vector<double>> components;  // k x d, orthonormal rows
    std::vector<double> explained_variance;    // k eigenvalues

    std::size_t in_dim() const { return mean.size(); }
    std::size_t out_dim() const { return components.size(); }
};

/// Fits on rows of X (n x d). n_components is clamped to d. Eigenvectors
/// come from a cyclic Jacobi sweep over the covariance matrix (1/n
/// normalization) of the standardized data. Throws on empty input or
/// ragged rows.
PcaModel pca_fit(const std::vector<std::vector<double>>& X, std::size_t n_components);

/// Projects one row: components * ((x - mean) / scale).
std::vector<double> pca_transform(const PcaModel& model, std::span<const double> x);

/// Convenience: transform every row.
std::vector<std::vector<double>> pca_transform(const PcaModel& model,
                                               const std::vector<std::vector<double>>& X);

void write_pca(std::ostream& os, const PcaModel& model);
PcaModel read_pca(std::istream& is);

}  // namespace mixmeter
