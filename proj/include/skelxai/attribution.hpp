#pragma once

#include <string>
#include <vector>

#include "skelxai/common.hpp"
#include "skelxai/model.hpp"

namespace skelxai {

enum class Method { cam, gradcam, random };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

// Per-joint importance for one window. `raw` is the pre-normalization score;
// `scores` is min-max normalized to [0,1]. All-equal raw scores normalize to
// all zeros.
struct AttributionMap {
    Method method = Method::cam;
    std::vector<double> scores;
    std::vector<double> raw;
    int class_idx = 0;
    std::string window_id;
};

std::vector<double> min_max_normalize(const std::vector<double>& raw);

// Output-layer weights projected onto the final feature maps, averaged over
// time per joint.
AttributionMap cam(const ForwardTrace& trace, const ModelInstance& m, int class_idx,
                   const std::string& window_id);

// Channel weights from the mean feature-map gradient instead of the FC
// weights. `rectify` clamps the combined map at zero before the temporal
// mean; it defaults off.
AttributionMap gradcam(const ForwardTrace& trace, const ModelInstance& m, int class_idx,
                       const std::string& window_id, bool rectify = false);

AttributionMap random_attribution(int joints, const std::string& window_id,
                                  std::uint64_t rng_seed);

// Per-joint median of member scores, renormalized.
AttributionMap ensemble_attribution(const std::vector<AttributionMap>& maps);

struct JointRanking {
    std::vector<int> order;  // permutation, descending score, ties by ascending index
    int k = 0;
};

JointRanking rank(const AttributionMap& map, int k);

}  // namespace skelxai
