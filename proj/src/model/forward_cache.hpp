#pragma once

// Per-record activations kept for the reverse pass.

#include <array>
#include <vector>

#include "sme/model/model.hpp"

namespace sme::detail {

struct ExpertCache {
  std::size_t index = 0;  // pool index
  Vector pre_hidden;      // W1 z + b1
  Vector hidden;          // phi(pre_hidden)
  Vector pre_out;         // W2 hidden + b2
  Vector out;             // sigma(pre_out)
};

struct BranchCache {
  std::vector<GateVector> gates;        // per active task slot
  std::vector<int> slot_of_expert;      // pool index -> experts[] index, -1 if not evaluated
  std::vector<ExpertCache> experts;     // evaluated experts, ascending pool index
  std::vector<Vector> fused;            // per active task slot
};

struct HeadCache {
  Vector input;       // concat(u_image, u_text)
  Vector pre_hidden;  // empty for linear heads
  Vector hidden;
};

struct ForwardCache {
  FusedInput input;
  std::array<BranchCache, 2> branches;
  std::vector<HeadCache> heads;
  Vector y;
};

void check_record(const Model& model, const RegionRecord& record);

void run_expert(const Model& model, const Expert& expert, std::span<const double> z, ExpertCache& cache);

void forward_cached(const Model& model, const RegionRecord& record, ForwardCache& cache);

}  // namespace sme::detail
