#pragma once

#include <optional>
#include <string>
#include <vector>

#include "repaint/network.hpp"

namespace repaint {

// Versioned JSON checkpoint of {architecture descriptor, flat parameters}.
// The flat values round-trip bit-exactly.
struct CheckpointMeta {
  std::string env_id;
  std::vector<double> task_weights;
};

void save_policy(const PolicyNetwork& net, const std::string& path,
                 const CheckpointMeta* meta = nullptr);
PolicyNetwork load_policy(const std::string& path,
                          CheckpointMeta* meta_out = nullptr);

void save_value(const ValueNetwork& net, const std::string& path);
ValueNetwork load_value(const std::string& path);

}  // namespace repaint
