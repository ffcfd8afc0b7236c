#include "cenet/tensor.hpp"

#include <cmath>
#include <string>

#include "cenet/error.hpp"

namespace cenet::ops {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, std::string_view op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()));
  }
}

}  // namespace

void check_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) throw NumericError("non-finite value in " + std::string(what));
}

void check_finite(double value, std::string_view what) {
  if (!std::isfinite(value)) throw NumericError("non-finite value in " + std::string(what));
}

Matrix backward_seed(const Matrix& loss) {
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ContractError("backward: loss must be a scalar, got " + std::to_string(loss.rows()) + "x" +
                        std::to_string(loss.cols()));
  }
  return Matrix::Ones(1, 1);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ContractError("matmul: inner dimensions differ");
  Matrix out = a * b;
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ContractError("matmul_nt: inner dimensions differ");
  Matrix out = a * b.transpose();
  return out;
}

void matmul_backward(const Matrix& a, const Matrix& b, const Matrix& d_out, Matrix* d_a, Matrix* d_b) {
  if (d_out.rows() != a.rows() || d_out.cols() != b.cols()) throw ContractError("matmul_backward: shape mismatch");
  if (d_a) {
    if (d_a->size() == 0) d_a->setZero(a.rows(), a.cols());
    d_a->noalias() += d_out * b.transpose();
  }
  if (d_b) {
    if (d_b->size() == 0) d_b->setZero(b.rows(), b.cols());
    d_b->noalias() += a.transpose() * d_out;
  }
}

Matrix add_row_bias(const Matrix& x, const RowVector& bias) {
  if (x.cols() != bias.cols()) throw ContractError("add_row_bias: width mismatch");
  Matrix out = x.rowwise() + bias;
  return out;
}

RowVector add_row_bias_backward(const Matrix& d_out) { return d_out.colwise().sum(); }

Matrix concat_cols(std::span<const Matrix* const> parts) {
  if (parts.empty()) return {};
  const auto rows = parts.front()->rows();
  Eigen::Index cols = 0;
  for (const auto* p : parts) {
    if (p->rows() != rows) throw ContractError("concat_cols: row count mismatch");
    cols += p->cols();
  }
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  for (const auto* p : parts) {
    out.middleCols(offset, p->cols()) = *p;
    offset += p->cols();
  }
  return out;
}

std::vector<Matrix> concat_cols_backward(const Matrix& d_out, std::span<const Eigen::Index> widths) {
  std::vector<Matrix> out;
  Eigen::Index offset = 0;
  for (const auto w : widths) {
    out.emplace_back(d_out.middleCols(offset, w));
    offset += w;
  }
  if (offset != d_out.cols()) throw ContractError("concat_cols_backward: widths do not cover the input");
  return out;
}

Matrix tanh(const Matrix& x) { return x.array().tanh().matrix(); }

Matrix tanh_backward(const Matrix& y, const Matrix& d_y) {
  require_same_shape(y, d_y, "tanh_backward");
  return (d_y.array() * (1.0 - y.array().square())).matrix();
}

Matrix sigmoid(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    // Branches keep exp() from overflowing for large |v|.
    out.data()[i] = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return out;
}

Matrix sigmoid_backward(const Matrix& y, const Matrix& d_y) {
  require_same_shape(y, d_y, "sigmoid_backward");
  return (d_y.array() * y.array() * (1.0 - y.array())).matrix();
}

Matrix exp(const Matrix& x) {
  Matrix out = x.array().exp().matrix();
  check_finite(out, "exp");
  return out;
}

Matrix log(const Matrix& x) {
  if ((x.array() <= 0.0).any()) throw NumericError("log of non-positive value");
  return x.array().log().matrix();
}

Matrix log_backward(const Matrix& x, const Matrix& d_y) {
  require_same_shape(x, d_y, "log_backward");
  return (d_y.array() / x.array()).matrix();
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "multiply");
  return (a.array() * b.array()).matrix();
}

Matrix softmax_rows(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mx = x.row(r).maxCoeff();
    out.row(r) = (x.row(r).array() - mx).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  check_finite(out, "softmax");
  return out;
}

Matrix softmax_rows_backward(const Matrix& y, const Matrix& d_y) {
  require_same_shape(y, d_y, "softmax_rows_backward");
  Matrix out(y.rows(), y.cols());
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const double dot = y.row(r).dot(d_y.row(r));
    out.row(r) = (y.row(r).array() * (d_y.row(r).array() - dot)).matrix();
  }
  return out;
}

Matrix l2_normalize_rows(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    out.row(r) = x.row(r) / std::max(x.row(r).norm(), kNormEpsilon);
  }
  return out;
}

Matrix l2_normalize_rows_backward(const Matrix& x, const Matrix& y, const Matrix& d_y) {
  require_same_shape(x, d_y, "l2_normalize_rows_backward");
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double n = x.row(r).norm();
    if (n > kNormEpsilon) {
      out.row(r) = (d_y.row(r) - y.row(r) * y.row(r).dot(d_y.row(r))) / n;
    } else {
      out.row(r) = d_y.row(r) / kNormEpsilon;
    }
  }
  return out;
}

double sum(const Matrix& x) { return x.sum(); }

double mean(const Matrix& x) {
  if (x.size() == 0) throw ContractError("mean of empty matrix");
  return x.mean();
}

Matrix sum_backward(Eigen::Index rows, Eigen::Index cols, double d_loss) {
  return Matrix::Constant(rows, cols, d_loss);
}

Matrix mean_backward(Eigen::Index rows, Eigen::Index cols, double d_loss) {
  return Matrix::Constant(rows, cols, d_loss / static_cast<double>(rows * cols));
}

Matrix gather_rows(const Matrix& table, std::span<const std::int32_t> ids) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) {
      throw BoundsError("gather_rows: id " + std::to_string(ids[i]) + " outside [0, " +
                        std::to_string(table.rows()) + ")");
    }
    out.row(static_cast<Eigen::Index>(i)) = table.row(ids[i]);
  }
  return out;
}

void scatter_add_rows(Matrix& table_grad, std::span<const std::int32_t> ids, const Matrix& d_rows) {
  if (static_cast<Eigen::Index>(ids.size()) != d_rows.rows()) throw ContractError("scatter_add_rows: row count mismatch");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    table_grad.row(ids[i]) += d_rows.row(static_cast<Eigen::Index>(i));
  }
}

}  // namespace cenet::ops
