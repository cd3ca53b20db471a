#pragma once

#include "cspnet/common.hpp"
#include "cspnet/signal.hpp"

#include <filesystem>
#include <optional>

namespace cspnet::data {

struct DatasetMeta {
    double fs = 0.0;
    std::vector<std::string> channel_names;
    std::vector<std::string> class_names;
    int n_trials = 0;
    int samples_per_trial = 0;
    int schema_version = 1;
    std::vector<int> sessions;  // optional; empty means single-session

    int channels() const { return static_cast<int>(channel_names.size()); }
    int classes() const { return static_cast<int>(class_names.size()); }
};

struct Dataset {
    DatasetMeta meta;
    std::vector<Matrix> trials;  // each channels x samples
    std::vector<int> labels;

    signal::Trial trial(int i) const {
        return signal::Trial{trials[static_cast<std::size_t>(i)], meta.fs};
    }
};

/// Directory layout: meta.json + trials.bin (raw float32 LE, row-major
/// [trial][channel][sample]) + labels.json (flat integer array).
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

struct SynthSpec {
    int classes = 2;
    int trials_per_class = 100;
    int channels = 8;
    int samples = 1000;
    double fs = 250.0;
    std::uint64_t seed = 0;
    double separation = 3.0;
};

/// Colored-noise trials x = A_c n(t) + shared background, where the mixing
/// A_c scales per-source variance by exp(+-separation/2) in a class-specific
/// sign pattern. Bitwise deterministic for a given spec.
Dataset synth_generate(const SynthSpec& spec);

struct SplitPlan {
    // fold id per trial for kfold; 0 = train, 1 = test for holdout
    std::vector<int> assignment;
    int folds = 0;

    std::vector<int> train_indices(int fold) const;
    std::vector<int> test_indices(int fold) const;
};

/// Seed-deterministic shuffled k-fold partition; fold sizes differ by <= 1.
SplitPlan kfold_split(int n, int k, std::uint64_t seed);

/// Whole-session assignment: trials of train_session form the single
/// training fold, trials of test_session the test fold.
SplitPlan holdout_split(const std::vector<int>& sessions, int train_session,
                        int test_session);

struct Metrics {
    double accuracy = 0.0;
    Matrix confusion;  // count of true class i predicted j
};

Metrics metrics(const std::vector<int>& predictions,
                const std::vector<int>& labels, int classes);

}  // namespace cspnet::data
