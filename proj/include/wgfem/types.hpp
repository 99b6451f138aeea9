#ifndef WGFEM_TYPES_HPP
#define WGFEM_TYPES_HPP

#include <complex>
#include <map>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace wgfem {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

//! Assembled systems are kept in compressed-row storage; solvers convert
//! to column-major internally where required.
using ComplexSparse = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;
using ComplexSparseCol = Eigen::SparseMatrix<Complex, Eigen::ColMajor>;

inline constexpr Complex kImag{0.0, 1.0};

//! Material table: region material name -> refractive index.
using MaterialMap = std::map<std::string, Complex>;

//! Invalid user input: bad config values, unknown tags, inconsistent geometry.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

//! Numerical breakdown: singular systems, eigensolver failure,
//! self-orthogonal modes, rank-deficient restrictions.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

//! True if the sparsity pattern of M equals the pattern of its transpose.
bool pattern_symmetric(const ComplexSparse& m);

//! Drop explicitly stored zeros (recompression after patch assembly).
void recompress(ComplexSparse& m);

//! True if both matrices store the same nonzero pattern.
bool same_pattern(const ComplexSparse& a, const ComplexSparse& b);

} // namespace wgfem

#endif
