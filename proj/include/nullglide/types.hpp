#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>

namespace nullglide {

inline constexpr int kMaxDim = 4;
inline constexpr int kMaxState = 2 * kMaxDim + 1;

// Small fixed-capacity storage: points, covectors and ODE states never exceed 2n+1 entries.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxState, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// d[l] = partial derivative of a matrix field along coordinate l.
using MatDerivs = std::array<Mat, kMaxDim>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ClassificationError : public Error {
 public:
  using Error::Error;
};

class TangencyError : public Error {
 public:
  using Error::Error;
};

class CausticError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

inline Vec make_vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace nullglide
