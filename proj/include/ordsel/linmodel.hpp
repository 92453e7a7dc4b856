#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace ordsel::linmodel {

// Column-major dense matrix.
struct Matrix {
    std::size_t n = 0;  // rows
    std::size_t p = 0;  // columns
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : n(rows), p(cols), data(rows * cols, 0.0) {}

    double& at(std::size_t i, std::size_t j) { return data[j * n + i]; }
    double at(std::size_t i, std::size_t j) const { return data[j * n + i]; }
    double* col(std::size_t j) { return data.data() + j * n; }
    const double* col(std::size_t j) const { return data.data() + j * n; }
};

// Regression input: response Y of length n, design X with n rows and p ranked columns.
struct Dataset {
    std::vector<double> Y;
    Matrix X;
    std::size_t n = 0;
    std::size_t p = 0;
};

// Orthonormal basis of the nested column spans plus everything selection needs.
//   U(:, 0..j-1) spans the same subspace as X(:, 0..j-1) for every j <= q.
//   yCoef[k] = <Y, u_k>; ySqNorm = |Y|^2.
//   R is the upper-triangular Gram-Schmidt factor (X_j = sum_{i<=j} R(i,j) u_i).
//   rssProf[j] = |Y - proj_j Y|^2, taken from the progressively updated residual
//   vector rather than from ySqNorm - sum yCoef^2, so it stays exact when the
//   residual is many orders of magnitude below |Y|^2. Nonincreasing in j.
struct OrthoModel {
    std::size_t n = 0;
    std::size_t p = 0;
    std::size_t q = 0;  // min(n, p)
    Matrix U;           // n x q
    std::vector<double> yCoef;
    double ySqNorm = 0.0;
    Matrix R;           // q x q upper triangular
    std::vector<double> rssProf;  // length q + 1
};

struct SelectionResult {
    double K = 0.0;
    std::size_t dim = 0;
    double rss = 0.0;
    std::vector<double> betaHat;  // length p, support in the first dim coordinates
};

struct GroundTruth {
    std::vector<double> betaStar;  // length p
    double sigma2 = 1.0;
    std::size_t dStar = 0;         // count of nonzero leading coefficients
};

// Column j (1-based in the message) is numerically inside the span of its predecessors.
class RankDeficiencyError : public std::runtime_error {
public:
    RankDeficiencyError(std::size_t col, const std::string& what)
        : std::runtime_error(what), column(col) {}
    std::size_t column;
};

// Modified Gram-Schmidt with one reorthogonalization pass over the first q = min(n, p)
// columns. Throws RankDeficiencyError naming the offending column when a residual norm
// falls below tol * |X_j|.
OrthoModel orthonormalize(const Dataset& data, double tol = 1e-10);

// rssProf copy: entry j is the residual sum of squares of the dimension-j model.
std::vector<double> rss_profile(const OrthoModel& model);

// Minimizes rss_profile[j] + K * sigma2 * j over j in {0..q}; ties go to the smallest j.
// betaHat is recovered by back-substitution through R.
SelectionResult select_model(const OrthoModel& model, double K, double sigma2);

// False discovery proportion for nested collections: max(dim - dStar, 0) / max(dim, 1).
double fdp(const SelectionResult& sel, const GroundTruth& truth);

// Out-of-sample mean squared error (1/n) |newY - X betaHat|^2.
double mse(const SelectionResult& sel, const std::vector<double>& newY, const Matrix& X);

// CSV ingestion: header row, column 1 = Y, columns 2..p+1 = ranked predictors.
// Throws std::runtime_error with a line-numbered message on malformed input.
Dataset read_csv(std::istream& in);
Dataset read_csv_file(const std::string& path);
std::string to_csv(const Dataset& data);

}  // namespace ordsel::linmodel
