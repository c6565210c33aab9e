#pragma once

#include <string>
#include <vector>

#include "vizsteg/dtoi.hpp"
#include "vizsteg/tensor.hpp"

namespace vizsteg::synth {

// Multi-octave gradient (Perlin) noise, min-max normalized to exactly [0,1].
Eigen::MatrixXd perlin(uint64_t seed, int h, int w, int octaves = 4, double base_cells = 4.0);

std::vector<Eigen::MatrixXd> synth_perlin(int count, int h, int w, uint64_t seed);

// Two correlated noise planes, a stand-in for wind/current style vector fields.
dtoi::ContinuousField synth_vector_field(uint64_t seed, int h, int w);

// Mixtures of uniform clouds and Gaussian clusters under a random affine range.
dtoi::DiscreteSet synth_scatter(uint64_t seed, int n_points);
std::vector<dtoi::DiscreteSet> synth_scatter_sets(int count, int n_points, uint64_t seed);

// Random alphanumeric string, length in [1, 1273] unless pinned.
std::string random_string(uint64_t seed, int min_len, int max_len);

// Chart-like RGB carrier images (bar / line / scatter rendering).
TensorF synth_chart(uint64_t seed, int h, int w);

}  // namespace vizsteg::synth
