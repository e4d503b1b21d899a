#pragma once

#include <memory>
#include <vector>

#include "gazecast/dataset.hpp"
#include "gazecast/saliency.hpp"

namespace gazecast::testsupport {

/// Synthetic head/gaze corpus with a learnable structure: the head moves at
/// piecewise-constant angular velocity, a single saliency blob random-walks
/// across the field of view, and gaze is head-forward plus 0.8x the blob's
/// angular position plus Gaussian noise. Future offsets therefore decompose
/// into a velocity term growing with the horizon step and a saliency term
/// readable from the input features.
struct SyntheticCorpus {
    std::vector<Session> sessions;
    std::unique_ptr<SaliencyProvider> provider;
    PoolSpec pool;      // 4 x 6 mean pooling -> F = 24
    int map_width = 48;
    int map_height = 36;
};

SyntheticCorpus make_synthetic_corpus(int n_sessions, int frames_per_session, uint64_t seed,
                                      double noise_deg = 1.0);

/// All window samples of the corpus under the given config, anchor-ordered.
std::vector<WindowSample> corpus_samples(const SyntheticCorpus& corpus, const WindowConfig& cfg);

}  // namespace gazecast::testsupport
