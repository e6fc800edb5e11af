#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "arg/relation.hpp"

namespace arg {

/// Column sums of the element-wise sum over all graphs in the group.
std::vector<double> column_sums(const RelationGraphGroup& group);
std::vector<double> column_sums(const Tensor& graph);

/// Actor with the largest column sum: the one every other actor draws on
/// most. Ties go to the lowest index.
std::size_t key_actor(const RelationGraphGroup& group);
std::size_t key_actor(const Tensor& graph);

/// {"n": N, "graphs": [[[...]...]...], "mask": [[...]...], ...}
std::string graph_group_to_json(const RelationGraphGroup& group);

/// Directed edge j → i for every G_ij ≥ threshold, one cluster per graph.
std::string graph_group_to_dot(const RelationGraphGroup& group, double threshold = 1e-3);

}  // namespace arg
