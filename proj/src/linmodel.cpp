#include "ordsel/linmodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>

namespace ordsel::linmodel {

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void validate(const Dataset& data) {
    if (data.n == 0 || data.p == 0) throw std::invalid_argument("dataset has no rows or no columns");
    if (data.Y.size() != data.n) throw std::invalid_argument("Y length does not match row count");
    if (data.X.n != data.n || data.X.p != data.p)
        throw std::invalid_argument("design dimensions disagree with dataset dimensions");
    for (double y : data.Y)
        if (!std::isfinite(y)) throw std::invalid_argument("non-finite entry in Y");
    for (double x : data.X.data)
        if (!std::isfinite(x)) throw std::invalid_argument("non-finite entry in X");
}

}  // namespace

OrthoModel orthonormalize(const Dataset& data, double tol) {
    validate(data);
    const std::size_t n = data.n;
    const std::size_t q = std::min(data.n, data.p);

    OrthoModel model;
    model.n = n;
    model.p = data.p;
    model.q = q;
    model.U = Matrix(n, q);
    model.R = Matrix(q, q);
    model.yCoef.assign(q, 0.0);
    model.rssProf.assign(q + 1, 0.0);

    std::vector<double> v(n);
    for (std::size_t j = 0; j < q; ++j) {
        const double* xj = data.X.col(j);
        std::copy(xj, xj + n, v.begin());
        const double colNorm = std::sqrt(dot(xj, xj, n));

        // Two projection passes: plain MGS plus one reorthogonalization sweep.
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t i = 0; i < j; ++i) {
                const double c = dot(model.U.col(i), v.data(), n);
                model.R.at(i, j) += c;
                const double* ui = model.U.col(i);
                for (std::size_t row = 0; row < n; ++row) v[row] -= c * ui[row];
            }
        }
        const double resNorm = std::sqrt(dot(v.data(), v.data(), n));
        if (!(resNorm > tol * colNorm) || resNorm == 0.0) {
            throw RankDeficiencyError(
                j + 1, "column " + std::to_string(j + 1) +
                           " lies in the span of the preceding columns (residual norm " +
                           g17(resNorm) + " < " + g17(tol) + " * " + g17(colNorm) + ")");
        }
        model.R.at(j, j) = resNorm;
        double* uj = model.U.col(j);
        for (std::size_t row = 0; row < n; ++row) uj[row] = v[row] / resNorm;
    }

    // Project Y by the same two-pass scheme, tracking the residual vector so the
    // RSS profile keeps full precision even when it is far below |Y|^2.
    model.ySqNorm = dot(data.Y.data(), data.Y.data(), n);
    std::vector<double> resid = data.Y;
    model.rssProf[0] = model.ySqNorm;
    for (std::size_t j = 0; j < q; ++j) {
        const double* uj = model.U.col(j);
        double c = dot(uj, resid.data(), n);
        for (std::size_t row = 0; row < n; ++row) resid[row] -= c * uj[row];
        const double c2 = dot(uj, resid.data(), n);
        for (std::size_t row = 0; row < n; ++row) resid[row] -= c2 * uj[row];
        model.yCoef[j] = c + c2;
        model.rssProf[j + 1] = dot(resid.data(), resid.data(), n);
    }
    return model;
}

std::vector<double> rss_profile(const OrthoModel& model) { return model.rssProf; }

SelectionResult select_model(const OrthoModel& model, double K, double sigma2) {
    if (!(K > 0.0)) throw std::invalid_argument("select_model: K must be positive");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("select_model: sigma2 must be positive");

    std::size_t best = 0;
    double bestCrit = model.rssProf[0];
    for (std::size_t j = 1; j <= model.q; ++j) {
        const double crit = model.rssProf[j] + K * sigma2 * static_cast<double>(j);
        if (crit < bestCrit) {
            bestCrit = crit;
            best = j;
        }
    }

    SelectionResult sel;
    sel.K = K;
    sel.dim = best;
    sel.rss = model.rssProf[best];
    sel.betaHat.assign(model.p, 0.0);
    // Fitted values are sum_{k<dim} yCoef[k] u_k = X(:,0..dim-1) betaHat, so betaHat
    // solves the upper-triangular system R(0..dim-1, 0..dim-1) betaHat = yCoef.
    for (std::size_t ji = best; ji-- > 0;) {
        double s = model.yCoef[ji];
        for (std::size_t k = ji + 1; k < best; ++k) s -= model.R.at(ji, k) * sel.betaHat[k];
        sel.betaHat[ji] = s / model.R.at(ji, ji);
    }
    return sel;
}

double fdp(const SelectionResult& sel, const GroundTruth& truth) {
    const double dim = static_cast<double>(sel.dim);
    const double falsePos =
        sel.dim > truth.dStar ? static_cast<double>(sel.dim - truth.dStar) : 0.0;
    return falsePos / std::max(dim, 1.0);
}

double mse(const SelectionResult& sel, const std::vector<double>& newY, const Matrix& X) {
    if (newY.size() != X.n) throw std::invalid_argument("mse: newY length does not match X rows");
    if (sel.betaHat.size() != X.p)
        throw std::invalid_argument("mse: betaHat length does not match X columns");
    std::vector<double> fitted(X.n, 0.0);
    for (std::size_t j = 0; j < X.p; ++j) {
        const double b = sel.betaHat[j];
        if (b == 0.0) continue;
        const double* xj = X.col(j);
        for (std::size_t i = 0; i < X.n; ++i) fitted[i] += b * xj[i];
    }
    double s = 0.0;
    for (std::size_t i = 0; i < X.n; ++i) {
        const double d = newY[i] - fitted[i];
        s += d * d;
    }
    return s / static_cast<double>(X.n);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

double parse_field(const std::string& field, std::size_t lineNo, std::size_t colNo) {
    std::size_t consumed = 0;
    double v = 0.0;
    try {
        v = std::stod(field, &consumed);
    } catch (const std::exception&) {
        consumed = 0;
    }
    while (consumed < field.size() &&
           (field[consumed] == ' ' || field[consumed] == '\t' || field[consumed] == '\r'))
        ++consumed;
    if (consumed == 0 || consumed != field.size() || !std::isfinite(v)) {
        throw std::runtime_error("line " + std::to_string(lineNo) + ", field " +
                                 std::to_string(colNo) + ": cannot parse '" + field +
                                 "' as a finite number");
    }
    return v;
}

}  // namespace

Dataset read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("line 1: missing header row");
    const std::size_t cols = split_csv_line(line).size();
    if (cols < 2)
        throw std::runtime_error("line 1: need at least two columns (Y plus one predictor)");

    std::vector<std::vector<double>> rows;
    std::size_t lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != cols) {
            throw std::runtime_error("line " + std::to_string(lineNo) + ": expected " +
                                     std::to_string(cols) + " fields, found " +
                                     std::to_string(fields.size()));
        }
        std::vector<double> row(cols);
        for (std::size_t c = 0; c < cols; ++c) row[c] = parse_field(fields[c], lineNo, c + 1);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("line 1: no data rows after the header");

    Dataset data;
    data.n = rows.size();
    data.p = cols - 1;
    data.Y.resize(data.n);
    data.X = Matrix(data.n, data.p);
    for (std::size_t i = 0; i < data.n; ++i) {
        data.Y[i] = rows[i][0];
        for (std::size_t j = 0; j < data.p; ++j) data.X.at(i, j) = rows[i][j + 1];
    }
    return data;
}

Dataset read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    return read_csv(in);
}

std::string to_csv(const Dataset& data) {
    std::ostringstream out;
    out << "Y";
    for (std::size_t j = 1; j <= data.p; ++j) out << ",X" << j;
    out << "\n";
    for (std::size_t i = 0; i < data.n; ++i) {
        out << g17(data.Y[i]);
        for (std::size_t j = 0; j < data.p; ++j) out << "," << g17(data.X.at(i, j));
        out << "\n";
    }
    return out.str();
}

}  // namespace ordsel::linmodel
