#pragma once

// Density matrices on one or two subsystems, the two-qubit Werner family and
// its 2 x (2S+1) equivalent, and the partial operations used to certify them.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <utility>
#include <vector>

#include "qsdc/linalg.hpp"
#include "qsdc/su2.hpp"

namespace qsdc {

inline constexpr std::size_t kSubsystemA = 0;
inline constexpr std::size_t kSubsystemB = 1;

/// Hermitian, unit-trace, positive-semidefinite matrix with its subsystem dimensions.
/// Construction validates all three properties.
class DensityMatrix {
  public:
    static constexpr double kHermitianTol = 1e-12;
    static constexpr double kTraceTol = 1e-12;
    static constexpr double kPsdTol = 1e-10;

    DensityMatrix(Matrix data, std::vector<int> dims) : data_(std::move(data)), dims_(std::move(dims)) {
        if (dims_.empty() || dims_.size() > 2) {
            throw InvalidParameter("DensityMatrix: one or two subsystems supported");
        }
        if (std::any_of(dims_.begin(), dims_.end(), [](int d) { return d < 1; })) {
            throw InvalidParameter("DensityMatrix: subsystem dimensions must be positive");
        }
        const int total = std::accumulate(dims_.begin(), dims_.end(), 1, std::multiplies<>());
        if (data_.rows() != total || data_.cols() != total) {
            throw DimensionMismatch("DensityMatrix: matrix is not " + std::to_string(total) + "x" +
                                    std::to_string(total));
        }
        if (hermitian_defect(data_) > kHermitianTol) {
            throw InvalidParameter("DensityMatrix: not Hermitian");
        }
        const Complex tr = data_.trace();
        if (std::abs(tr - 1.0) > kTraceTol) {
            throw InvalidParameter("DensityMatrix: trace is not 1");
        }
        if (min_eigenvalue(data_) < -kPsdTol) {
            throw InvalidParameter("DensityMatrix: not positive semidefinite");
        }
    }

    static DensityMatrix maximally_mixed(std::vector<int> dims) {
        const int total = std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<>());
        return DensityMatrix(Matrix::Identity(total, total) / double(total), std::move(dims));
    }

    const Matrix& data() const noexcept { return data_; }
    const std::vector<int>& dims() const noexcept { return dims_; }
    int dim() const noexcept { return int(data_.rows()); }
    bool bipartite() const noexcept { return dims_.size() == 2; }

  private:
    Matrix data_;
    std::vector<int> dims_;
};

struct AlphaRange {
    double lower;
    double upper;

    bool contains(double alpha, double slack = 1e-12) const {
        return alpha >= lower - slack && alpha <= upper + slack;
    }

    std::string to_string() const {
        std::ostringstream os;
        os.precision(12);
        os << '[' << lower << ", " << upper << ']';
        return os.str();
    }
};

inline AlphaRange werner_2x2_range() { return {-1.0 / 3.0, 1.0}; }

/// Valid mixing range of the 2 x (2S+1) state: [-S/(S+1), 1].
inline AlphaRange werner_equivalent_range(int two_s) {
    if (two_s < 1) throw InvalidParameter("werner_equivalent_range: two_s must be >= 1");
    return {-double(two_s) / double(two_s + 2), 1.0};
}

/// (1 - alpha sigma_A . sigma_B) / 4
inline DensityMatrix werner_2x2(double alpha) {
    const auto range = werner_2x2_range();
    if (!std::isfinite(alpha) || !range.contains(alpha)) {
        throw InvalidParameter("werner_2x2: alpha must lie in " + range.to_string());
    }
    Matrix corr = Matrix::Zero(4, 4);
    for (int i = 0; i < 3; ++i) corr += kron(pauli(i), pauli(i));
    return DensityMatrix((Matrix::Identity(4, 4) - alpha * corr) / 4.0, {2, 2});
}

/// sigma . S / S on C^2 (x) C^(2S+1). Eigenvalues 1 (x 2S+2) and -(S+1)/S (x 2S).
inline Matrix sigma_dot_unit_spin(const SpinRep& rep) {
    Matrix out = Matrix::Zero(2 * rep.dim(), 2 * rep.dim());
    for (int i = 0; i < 3; ++i) out += kron(pauli(i), rep.generator(i));
    return out / rep.spin();
}

/// (1 - alpha sigma_A . S_B / S) / (2(2S+1)); the unit-normalised spin keeps the
/// state positive over the whole range [-S/(S+1), 1].
inline DensityMatrix werner_equivalent(double alpha, int two_s) {
    const auto range = werner_equivalent_range(two_s);
    if (!std::isfinite(alpha) || !range.contains(alpha)) {
        throw InvalidParameter("werner_equivalent: alpha must lie in " + range.to_string() +
                               " for two_s=" + std::to_string(two_s));
    }
    const SpinRep rep = make_spin_rep(two_s);
    const int total = 2 * rep.dim();
    Matrix data = (Matrix::Identity(total, total) - alpha * sigma_dot_unit_spin(rep)) / double(total);
    return DensityMatrix(std::move(data), {2, rep.dim()});
}

inline Matrix tensor(const Matrix& a, const Matrix& b) { return kron(a, b); }

inline DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
    if (a.bipartite() || b.bipartite()) {
        throw InvalidParameter("tensor: both factors must be single-system states");
    }
    return DensityMatrix(kron(a.data(), b.data()), {a.dim(), b.dim()});
}

namespace detail {

inline void require_bipartite(const DensityMatrix& rho, std::size_t index, const char* what) {
    if (!rho.bipartite()) throw InvalidParameter(std::string(what) + ": state is not bipartite");
    if (index > kSubsystemB) {
        throw InvalidParameter(std::string(what) + ": subsystem index must be 0 (A) or 1 (B), got " +
                               std::to_string(index));
    }
}

}  // namespace detail

/// Reduced state of subsystem `keep`.
inline DensityMatrix partial_trace(const DensityMatrix& rho, std::size_t keep) {
    detail::require_bipartite(rho, keep, "partial_trace");
    const int da = rho.dims()[0];
    const int db = rho.dims()[1];
    const Matrix& m = rho.data();
    if (keep == kSubsystemA) {
        Matrix out = Matrix::Zero(da, da);
        for (int i = 0; i < da; ++i)
            for (int j = 0; j < da; ++j) out(i, j) = m.block(i * db, j * db, db, db).trace();
        return DensityMatrix(std::move(out), {da});
    }
    Matrix out = Matrix::Zero(db, db);
    for (int i = 0; i < da; ++i) out += m.block(i * db, i * db, db, db);
    return DensityMatrix(std::move(out), {db});
}

/// Transposes the indices of subsystem `on`. The result is Hermitian but not
/// necessarily positive, so it is returned as a plain matrix.
inline Matrix partial_transpose(const DensityMatrix& rho, std::size_t on) {
    detail::require_bipartite(rho, on, "partial_transpose");
    const int da = rho.dims()[0];
    const int db = rho.dims()[1];
    const Matrix& m = rho.data();
    Matrix out(m.rows(), m.cols());
    for (int i = 0; i < da; ++i) {
        for (int j = 0; j < da; ++j) {
            const auto block = m.block(i * db, j * db, db, db);
            if (on == kSubsystemA) {
                out.block(j * db, i * db, db, db) = block;
            } else {
                out.block(i * db, j * db, db, db) = block.transpose();
            }
        }
    }
    return out;
}

/// Re Tr(rho O). Rejects observables whose expectation has an imaginary part above 1e-10.
inline double expectation(const DensityMatrix& rho, const Matrix& obs) {
    if (obs.rows() != rho.dim() || obs.cols() != rho.dim()) {
        throw DimensionMismatch("expectation: observable is " + std::to_string(obs.rows()) + "x" +
                                std::to_string(obs.cols()) + ", state is " +
                                std::to_string(rho.dim()) + "x" + std::to_string(rho.dim()));
    }
    const Complex value = rho.data().cwiseProduct(obs.transpose()).sum();
    if (std::abs(value.imag()) > 1e-10) {
        throw InvalidParameter("expectation: observable is not Hermitian (imaginary residue " +
                               std::to_string(value.imag()) + ")");
    }
    return value.real();
}

/// Smallest eigenvalue of the partial transpose; >= 0 means PPT.
inline double min_partial_transpose_eigenvalue(const DensityMatrix& rho, std::size_t on = kSubsystemB) {
    return min_eigenvalue(partial_transpose(rho, on));
}

}  // namespace qsdc
