#pragma once

#include <cstdint>
#include <vector>

#include "gwlimits/process_model.hpp"

namespace gwtest {

gwlimits::ProcessSpec e1();
gwlimits::ProcessSpec e2();
gwlimits::ProcessSpec e3();
gwlimits::ProcessSpec e4();

/// Random valid critical process with V in [1, max_types]. Each type mixes a
/// supercritical random law with extinction, p_k(theta) = (1-theta)^{a_k} p~_k
/// + (1 - (1-theta)^{a_k}) delta_0, and theta is found by bisection on rho = 1.
gwlimits::ProcessSpec random_critical_spec(std::uint64_t seed, std::size_t max_types = 4);

/// Unit vectors on the sphere from a fixed seed.
std::vector<Eigen::VectorXd> random_unit_vectors(std::size_t dim, std::size_t count, std::uint64_t seed);

}  // namespace gwtest
