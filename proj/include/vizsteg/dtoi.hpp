#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vizsteg/common.hpp"

namespace vizsteg::dtoi {

using Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

// Spatially continuous data: one or more 2-D planes (density map: 1 plane,
// 2-D vector field: 2 planes, volume: one plane per slice).
struct ContinuousField {
    std::vector<MatrixXd> planes;
};

struct Point2 {
    double x = 0.0, y = 0.0;
};

struct DiscreteSet {
    std::vector<Point2> points;
};

struct NormRange {
    double lo = 0.0, hi = 1.0;
    bool degenerate = false;  // hi == lo; plane was emitted as all-zero
};

struct Placement {
    int channel = 0;
    int row0 = 0, col0 = 0;
    int h = 0, w = 0;  // pixel extent inside the channel
};

struct PlanePlan {
    NormRange norm;
    Placement place;
};

struct PartPlan {
    long n = 0;         // points carried by this part
    int hs = 0, ws = 0; // grid before interpolation
    long pad = 0;       // replicas appended by the padding step
    // The replicated element. The per-group y-sort can move replicas away
    // from the grid tail, so inversion identifies them by value instead.
    double pad_x = 0, pad_y = 0;
    NormRange nx, ny;
    Placement x_place, y_place;  // pixel extent is (k+1)*hs x (k+1)*ws
};

enum class DataKind { none, continuous, discrete };

// Everything required to invert the data-to-image transform. Serialized into
// the QR payload by the payload module.
struct DataImagePlan {
    DataKind kind = DataKind::none;
    int k_interp = 0;   // K: pixels inserted between adjacent pixels (discrete)
    int channels = 0;   // grayscale channels in the produced DataImageSet
    std::vector<PlanePlan> planes;
    std::vector<PartPlan> parts;
    int pad_bottom = 0, pad_right = 0;  // odd-dimension carrier padding
};

// 1..3 grayscale channels, values in [0,1]. Kept in double precision; the
// 8-bit grid is imposed by quantize_channels before the network consumes them.
struct DataImageSet {
    std::vector<MatrixXd> channels;
};

// ---------------------------------------------------------------------------
// Continuous data
// ---------------------------------------------------------------------------

// Maps each plane through (p - lo) / (hi - lo). A constant plane comes back
// all-zero with the degenerate flag set.
std::pair<std::vector<MatrixXd>, std::vector<NormRange>> normalize_planes(const ContinuousField& field);

std::pair<DataImageSet, DataImagePlan> dtoi_continuous(const ContinuousField& field, int carrier_h,
                                                       int carrier_w, int max_channels = 3);

ContinuousField inverse_dtoi_continuous(const DataImageSet& imgs, const DataImagePlan& plan);

// ---------------------------------------------------------------------------
// Discrete data
// ---------------------------------------------------------------------------

// The sort - pad - group - sort - normalize - reshape - interpolate procedure
// for a single (hs, ws) grid. Produces a 2-channel set (x image, y image) of
// size ((k+1)*hs, (k+1)*ws) and the matching single-part plan.
std::pair<DataImageSet, DataImagePlan> dtoi_discrete(const DiscreteSet& set, int hs, int ws, int k);

DiscreteSet inverse_dtoi_discrete(const DataImageSet& imgs, const DataImagePlan& plan);

struct DiscretePart {
    DiscreteSet set;
    int hs = 0, ws = 0;
};

// Partitions a set so every part's interpolated images fit the carrier and the
// full collection packs into max_channels grayscale channels.
std::vector<DiscretePart> split_discrete(const DiscreteSet& set, int carrier_h, int carrier_w, int k,
                                         int max_channels = 3);

// split_discrete + per-part transform + packing into channels.
std::pair<DataImageSet, DataImagePlan> dtoi_discrete_auto(const DiscreteSet& set, int carrier_h,
                                                          int carrier_w, int k, int max_channels = 3);

// Largest representable point count for the given carrier and K.
long max_discrete_points(int carrier_h, int carrier_w, int k, int max_channels = 3);

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

// Inserts k linearly interpolated pixels between adjacent pixels, rows first,
// then columns; the trailing k pixels of each row/column hold the edge value.
MatrixXd interpolate_grid(const MatrixXd& base, int k);

// Picks the original (stride k+1) pixels back out of an interpolated image.
MatrixXd sample_grid(const MatrixXd& interp, int hs, int ws, int k);

// Rounds all channels onto the 8-bit grid k/255.
void quantize_channels(DataImageSet& imgs);

}  // namespace vizsteg::dtoi
