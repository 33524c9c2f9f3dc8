#pragma once

#include <cstdint>
#include <vector>

#include "amr/types.hpp"

namespace amr {

struct FeedforwardConfig {
  std::vector<int> widths = {64, 64};
  int epochs = 200;
  int batch = 64;
  double step = 1e-3;
  std::uint64_t seed = 0;
};

/// Fully connected ReLU network with a linear output unit, trained by seeded
/// mini-batch Adam on squared loss. Inputs and target are standardized
/// internally; predictions are returned on the original target scale.
class FeedforwardRegressor {
 public:
  static FeedforwardRegressor fit(const Matrix& X, const Vector& y, const FeedforwardConfig& cfg);

  Vector predict(const Matrix& X) const;
  double final_loss() const { return final_loss_; }

 private:
  struct Layer {
    Matrix W;  // out x in
    Vector b;
  };
  std::vector<Layer> layers_;
  Vector x_mean_, x_scale_;
  double y_mean_ = 0.0, y_scale_ = 1.0;
  double final_loss_ = 0.0;
};

}  // namespace amr
