#include "rlncs/roi_policy.hpp"

#include <algorithm>

namespace rlncs {

std::string_view to_string(ActionId a) { return a == ActionId::Direct ? "direct" : "learned"; }

IndexSet complement(const IndexSet& roi, Index n) {
  std::vector<char> in(static_cast<std::size_t>(n), 0);
  for (Index i : roi) {
    if (i < 0 || i >= n) throw ParameterError("complement: index out of range");
    in[static_cast<std::size_t>(i)] = 1;
  }
  IndexSet out;
  for (Index i = 0; i < n; ++i)
    if (!in[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

IndexSet action_direct(const IndexSet& roi) { return roi; }

IndexSet action_learned(const IndexSet& roi, const IndexSet& non_roi, const Vector& output, double th_up,
                        double th_low) {
  if (!(th_up > th_low)) throw ParameterError("action_learned: th_up must exceed th_low");
  IndexSet predicted;
  for (Index j : roi)
    if (output[j] >= th_low) predicted.push_back(j);
  for (Index j : non_roi)
    if (output[j] >= th_up) predicted.push_back(j);
  std::sort(predicted.begin(), predicted.end());
  return predicted;
}

Vector state_from_roi(const IndexSet& roi, Index n) { return indicator(roi, n); }

}  // namespace rlncs
