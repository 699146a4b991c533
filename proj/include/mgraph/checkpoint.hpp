#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mgraph/tensor.hpp"

namespace mgraph {

using NamedParams = std::vector<std::pair<std::string, Tensor>>;

// Versioned JSON checkpoint: {name -> shape + row-major float64 data}.
void save_checkpoint(const std::string& path, const NamedParams& params);

// Loads values into matching tensors in-place; shape or name mismatch is an
// error.
void load_checkpoint(const std::string& path, NamedParams& params);

}  // namespace mgraph
