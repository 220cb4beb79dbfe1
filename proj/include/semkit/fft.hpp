#pragma once

#include "semkit/core.hpp"

#include <unsupported/Eigen/FFT>

namespace semkit {

/// Unnormalized forward 2-D DFT: X(k,l) = sum x(u,v) exp(-2πi(ku/H + lv/W)).
ComplexImage fft2(const Image& img);

/// Inverse of fft2, including the 1/(H·W) factor.
ComplexImage ifft2(const ComplexImage& spec);

/// Unnormalized forward 1-D DFT.
Eigen::VectorXcd fft1(const Eigen::VectorXd& x);

/// Smallest even integer ≥ n whose only prime factors are 2, 3 and 5.
Eigen::Index next_fast_size(Eigen::Index n);

/// Column-major so the second (column) pass runs over contiguous memory.
using RealSpectrum = Eigen::Array<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;

/// Real-input 2-D transform of fixed size keeping the half spectrum (cols/2+1 columns).
/// Owns its FFT plans and scratch; not safe to share between threads.
class RealFft2 {
 public:
  RealFft2(Eigen::Index rows, Eigen::Index cols);

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  Eigen::Index half_cols() const { return cols_ / 2 + 1; }

  /// `src` must be exactly rows() × cols().
  RealSpectrum forward(const Image& src);
  /// Includes the 1/(rows·cols) normalisation.
  Image inverse(const RealSpectrum& spec);

 private:
  Eigen::Index rows_;
  Eigen::Index cols_;
  Eigen::FFT<double> row_fft_;
  Eigen::FFT<double> col_fft_;
  Eigen::VectorXcd row_buf_;
  Eigen::VectorXcd col_buf_;
  RealSpectrum scratch_;
};

}  // namespace semkit
