#pragma once

// Dense double-precision matrices and the forward/adjoint pairs the model is
// built from. Each `*_backward` takes the upstream gradient of the op output
// and returns (or accumulates) the gradient of its inputs.

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace cenet {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

namespace ops {

inline constexpr double kNormEpsilon = 1e-12;

/// Throws NumericError if any entry is NaN or infinite.
void check_finite(const Matrix& m, std::string_view what);
void check_finite(double value, std::string_view what);

/// Gradient seed for a scalar loss. ContractError unless `loss` is 1x1.
Matrix backward_seed(const Matrix& loss);

// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// Accumulates the gradients of out = a * b.
void matmul_backward(const Matrix& a, const Matrix& b, const Matrix& d_out, Matrix* d_a, Matrix* d_b);

// Adds `bias` (1 x cols) to every row.
Matrix add_row_bias(const Matrix& x, const RowVector& bias);
RowVector add_row_bias_backward(const Matrix& d_out);

Matrix concat_cols(std::span<const Matrix* const> parts);
// Splits d_out column-wise back into blocks of the given widths.
std::vector<Matrix> concat_cols_backward(const Matrix& d_out, std::span<const Eigen::Index> widths);

Matrix tanh(const Matrix& x);
Matrix tanh_backward(const Matrix& y, const Matrix& d_y);

Matrix sigmoid(const Matrix& x);
Matrix sigmoid_backward(const Matrix& y, const Matrix& d_y);

Matrix exp(const Matrix& x);
// NumericError on non-positive input.
Matrix log(const Matrix& x);
Matrix log_backward(const Matrix& x, const Matrix& d_y);

Matrix multiply(const Matrix& a, const Matrix& b);

// Row-wise, max-subtracted.
Matrix softmax_rows(const Matrix& x);
Matrix softmax_rows_backward(const Matrix& y, const Matrix& d_y);

// Divides each row by max(||row||, kNormEpsilon).
Matrix l2_normalize_rows(const Matrix& x);
Matrix l2_normalize_rows_backward(const Matrix& x, const Matrix& y, const Matrix& d_y);

double sum(const Matrix& x);
double mean(const Matrix& x);
Matrix sum_backward(Eigen::Index rows, Eigen::Index cols, double d_loss);
Matrix mean_backward(Eigen::Index rows, Eigen::Index cols, double d_loss);

Matrix gather_rows(const Matrix& table, std::span<const std::int32_t> ids);
// table_grad[ids[i]] += d_rows[i]
void scatter_add_rows(Matrix& table_grad, std::span<const std::int32_t> ids, const Matrix& d_rows);

}  // namespace ops
}  // namespace cenet
