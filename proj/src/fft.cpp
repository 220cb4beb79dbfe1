#include "semkit/fft.hpp"

#include <vector>

namespace semkit {
namespace {

using Complex = std::complex<double>;

void transform_columns(ComplexImage& data, Eigen::FFT<double>& fft, bool inverse) {
  const Eigen::Index rows = data.rows();
  Eigen::VectorXcd in(rows), out(rows);
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    in = data.col(c).matrix();
    if (inverse) {
      fft.inv(out.data(), in.data(), rows);
    } else {
      fft.fwd(out.data(), in.data(), rows);
    }
    data.col(c) = out.array();
  }
}

void transform_rows(ComplexImage& data, Eigen::FFT<double>& fft, bool inverse) {
  const Eigen::Index cols = data.cols();
  Eigen::VectorXcd in(cols), out(cols);
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    in = data.row(r).transpose().matrix();
    if (inverse) {
      fft.inv(out.data(), in.data(), cols);
    } else {
      fft.fwd(out.data(), in.data(), cols);
    }
    data.row(r) = out.transpose().array();
  }
}

}  // namespace

ComplexImage fft2(const Image& img) {
  ComplexImage data = img.cast<Complex>();
  Eigen::FFT<double> fft;
  transform_rows(data, fft, false);
  transform_columns(data, fft, false);
  return data;
}

ComplexImage ifft2(const ComplexImage& spec) {
  ComplexImage data = spec;
  Eigen::FFT<double> fft;  // default flags scale each pass by 1/n
  transform_rows(data, fft, true);
  transform_columns(data, fft, true);
  return data;
}

Eigen::VectorXcd fft1(const Eigen::VectorXd& x) {
  Eigen::FFT<double> fft;
  Eigen::VectorXcd in = x.cast<Complex>();
  Eigen::VectorXcd out(x.size());
  if (x.size() > 0) fft.fwd(out.data(), in.data(), x.size());
  return out;
}

Eigen::Index next_fast_size(Eigen::Index n) {
  if (n <= 2) return 2;
  for (Eigen::Index m = n + (n % 2);; m += 2) {
    Eigen::Index k = m;
    for (Eigen::Index p : {2, 3, 5}) {
      while (k % p == 0) k /= p;
    }
    if (k == 1) return m;
  }
}

RealFft2::RealFft2(Eigen::Index rows, Eigen::Index cols)
    : rows_(rows), cols_(cols), row_buf_(cols / 2 + 1), col_buf_(rows) {
  if (rows < 1 || cols < 2 || cols % 2 != 0) {
    throw ArgumentError("RealFft2 needs rows >= 1 and an even column count");
  }
  row_fft_.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  scratch_.resize(rows_, half_cols());
}

RealSpectrum RealFft2::forward(const Image& src) {
  if (src.rows() != rows_ || src.cols() != cols_) throw ArgumentError("RealFft2: size mismatch");
  RealSpectrum spec(rows_, half_cols());
  for (Eigen::Index r = 0; r < rows_; ++r) {
    row_fft_.fwd(row_buf_.data(), src.row(r).data(), cols_);
    spec.row(r) = row_buf_.transpose().array();
  }
  for (Eigen::Index c = 0; c < half_cols(); ++c) {
    col_fft_.fwd(col_buf_.data(), &spec(0, c), rows_);
    spec.col(c) = col_buf_.array();
  }
  return spec;
}

Image RealFft2::inverse(const RealSpectrum& spec) {
  if (spec.rows() != rows_ || spec.cols() != half_cols()) {
    throw ArgumentError("RealFft2: spectrum size mismatch");
  }
  for (Eigen::Index c = 0; c < half_cols(); ++c) {
    col_fft_.inv(&scratch_(0, c), &spec(0, c), rows_);
  }
  Image out(rows_, cols_);
  for (Eigen::Index r = 0; r < rows_; ++r) {
    row_buf_ = scratch_.row(r).transpose().matrix();
    row_fft_.inv(out.row(r).data(), row_buf_.data(), cols_);
  }
  return out;
}

}  // namespace semkit
