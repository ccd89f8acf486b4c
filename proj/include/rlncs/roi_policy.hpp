#pragma once

#include "rlncs/core.hpp"

#include <string_view>

namespace rlncs {

/// The two ways of predicting the next ROI.
enum class ActionId : int {
  Direct = 0,   // carry the current ROI estimate forward
  Learned = 1,  // threshold the LSTM output
};

inline constexpr int kNumActions = 2;

std::string_view to_string(ActionId a);

/// Current ROI estimate, its complement, and the prediction for the next step.
struct RoiSets {
  IndexSet roi;
  IndexSet non_roi;
  IndexSet predicted;
};

/// Complement of `roi` in {0..n-1}.
IndexSet complement(const IndexSet& roi, Index n);

/// Returns the current ROI unchanged.
IndexSet action_direct(const IndexSet& roi);

/// Keeps ROI members whose output is >= th_low and admits non-ROI members
/// whose output is >= th_up. Throws ParameterError unless th_up > th_low.
IndexSet action_learned(const IndexSet& roi, const IndexSet& non_roi, const Vector& output, double th_up,
                        double th_low);

/// Binary state vector with ones on `roi`. Throws on out-of-range indices.
Vector state_from_roi(const IndexSet& roi, Index n);

}  // namespace rlncs
