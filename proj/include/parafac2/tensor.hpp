#ifndef PARAFAC2_TENSOR_HPP_
#define PARAFAC2_TENSOR_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "parafac2/common.hpp"

namespace parafac2 {

// Three-way data with a shared first mode and a ragged second mode: slab k is
// a dense I x J_k matrix. Immutable once constructed; construction validates
// shapes and finiteness so downstream solvers can assume clean input.
class RaggedTensor3 {
 public:
  explicit RaggedTensor3(std::vector<Matrix> slabs) : slabs_(std::move(slabs)) {
    if (slabs_.empty()) throw Error(ErrorCode::EmptyInput, "no slabs given");
    const Eigen::Index rows = slabs_.front().rows();
    for (std::size_t k = 0; k < slabs_.size(); ++k) {
      const Matrix& x = slabs_[k];
      if (x.rows() == 0 || x.cols() == 0)
        throw Error(ErrorCode::EmptyInput,
                    "slab " + std::to_string(k + 1) + " is empty");
      if (x.rows() != rows)
        throw Error(ErrorCode::RowMismatch,
                    "slab " + std::to_string(k + 1) + " has " +
                        std::to_string(x.rows()) + " rows, expected " +
                        std::to_string(rows));
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i)
          if (!std::isfinite(x(i, j)))
            throw Error(ErrorCode::NonFiniteEntry,
                        "slab " + std::to_string(k + 1) + " entry (" +
                            std::to_string(i + 1) + "," + std::to_string(j + 1) +
                            ") is not finite");
    }
  }

  Eigen::Index rows() const { return slabs_.front().rows(); }
  int num_slabs() const { return static_cast<int>(slabs_.size()); }
  Eigen::Index cols(int k) const { return slabs_[static_cast<std::size_t>(k)].cols(); }
  Eigen::Index min_cols() const {
    Eigen::Index m = slabs_.front().cols();
    for (const Matrix& x : slabs_) m = std::min(m, x.cols());
    return m;
  }

  const Matrix& slab(int k) const { return slabs_[static_cast<std::size_t>(k)]; }
  const std::vector<Matrix>& slabs() const { return slabs_; }

 private:
  std::vector<Matrix> slabs_;
};

inline RaggedTensor3 new_ragged(std::vector<Matrix> slabs) {
  return RaggedTensor3(std::move(slabs));
}

inline double frobenius_sq(const RaggedTensor3& t) {
  double total = 0.0;
  for (const Matrix& x : t.slabs()) total += x.squaredNorm();
  return total;
}

// Forms X_k P_k for every slab; the result is rectangular (I x M x K).
inline std::vector<Matrix> project_slabs(const RaggedTensor3& t,
                                         const std::vector<Matrix>& projections) {
  if (static_cast<int>(projections.size()) != t.num_slabs())
    throw Error(ErrorCode::ShapeMismatch,
                "expected " + std::to_string(t.num_slabs()) + " projections, got " +
                    std::to_string(projections.size()));
  const Eigen::Index m = projections.front().cols();
  std::vector<Matrix> out;
  out.reserve(projections.size());
  for (int k = 0; k < t.num_slabs(); ++k) {
    const Matrix& p = projections[static_cast<std::size_t>(k)];
    if (p.rows() != t.cols(k) || p.cols() != m)
      throw Error(ErrorCode::ShapeMismatch,
                  "projection " + std::to_string(k + 1) + " is " +
                      std::to_string(p.rows()) + "x" + std::to_string(p.cols()) +
                      ", slab has " + std::to_string(t.cols(k)) + " columns");
    out.push_back(t.slab(k) * p);
  }
  return out;
}

}  // namespace parafac2

#endif  // PARAFAC2_TENSOR_HPP_
