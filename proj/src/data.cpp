#include "cspnet/data.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace cspnet::data {

static_assert(std::endian::native == std::endian::little,
              "dataset format assumes a little-endian host");

namespace {

using nlohmann::json;

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ArgumentError("malformed JSON in " + path.string() + ": " +
                            e.what());
    }
    return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArgumentError("cannot write " + path.string());
    out << text;
}

std::vector<char> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw ArgumentError("cannot open " + path.string());
    const std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<char> bytes(static_cast<std::size_t>(size));
    in.read(bytes.data(), size);
    return bytes;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& dir) {
    const json meta_j = read_json(dir / "meta.json");
    Dataset ds;
    try {
        ds.meta.fs = meta_j.at("fs").get<double>();
        ds.meta.channel_names =
            meta_j.at("channel_names").get<std::vector<std::string>>();
        ds.meta.class_names =
            meta_j.at("class_names").get<std::vector<std::string>>();
        ds.meta.n_trials = meta_j.at("n_trials").get<int>();
        ds.meta.samples_per_trial = meta_j.at("samples_per_trial").get<int>();
        ds.meta.schema_version = meta_j.at("schema_version").get<int>();
        if (meta_j.contains("sessions"))
            ds.meta.sessions = meta_j.at("sessions").get<std::vector<int>>();
    } catch (const json::exception& e) {
        throw ArgumentError("meta.json: " + std::string(e.what()));
    }
    if (ds.meta.schema_version != 1)
        throw ArgumentError("meta.json: unknown schema_version " +
                            std::to_string(ds.meta.schema_version));
    require(ds.meta.fs > 0.0, "meta.json: fs must be positive");
    require(ds.meta.n_trials > 0, "meta.json: n_trials must be positive");
    require(ds.meta.channels() > 0, "meta.json: channel_names empty");
    require(ds.meta.classes() > 0, "meta.json: class_names empty");
    require(ds.meta.samples_per_trial > 0,
            "meta.json: samples_per_trial must be positive");
    if (!ds.meta.sessions.empty())
        require(static_cast<int>(ds.meta.sessions.size()) == ds.meta.n_trials,
                "meta.json: sessions length must equal n_trials");

    const int C = ds.meta.channels();
    const int T = ds.meta.samples_per_trial;
    const std::vector<char> bytes = read_bytes(dir / "trials.bin");
    const std::size_t expected = static_cast<std::size_t>(ds.meta.n_trials) *
                                 C * T * sizeof(float);
    if (bytes.size() != expected)
        throw ArgumentError(
            "trials.bin: size mismatch, expected " + std::to_string(expected) +
            " bytes for " + std::to_string(ds.meta.n_trials) + " trials, got " +
            std::to_string(bytes.size()));

    ds.trials.reserve(static_cast<std::size_t>(ds.meta.n_trials));
    const float* f = reinterpret_cast<const float*>(bytes.data());
    for (int i = 0; i < ds.meta.n_trials; ++i) {
        Matrix m(C, T);
        for (int c = 0; c < C; ++c)
            for (int t = 0; t < T; ++t)
                m(c, t) = static_cast<double>(*f++);
        if (!m.allFinite())
            throw ArgumentError("trials.bin: non-finite sample in trial " +
                                std::to_string(i));
        ds.trials.push_back(std::move(m));
    }

    const json labels_j = read_json(dir / "labels.json");
    if (!labels_j.is_array())
        throw ArgumentError("labels.json: expected a flat integer array");
    ds.labels = labels_j.get<std::vector<int>>();
    if (static_cast<int>(ds.labels.size()) != ds.meta.n_trials)
        throw ArgumentError("labels.json: length " +
                            std::to_string(ds.labels.size()) +
                            " does not match n_trials " +
                            std::to_string(ds.meta.n_trials));
    for (int l : ds.labels)
        if (l < 0 || l >= ds.meta.classes())
            throw ArgumentError("labels.json: label " + std::to_string(l) +
                                " outside [0, " +
                                std::to_string(ds.meta.classes()) + ")");
    return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    require(static_cast<int>(ds.trials.size()) == ds.meta.n_trials,
            "save_dataset: trial count mismatch");
    require(static_cast<int>(ds.labels.size()) == ds.meta.n_trials,
            "save_dataset: label count mismatch");
    std::filesystem::create_directories(dir);

    json meta_j;
    meta_j["fs"] = ds.meta.fs;
    meta_j["channel_names"] = ds.meta.channel_names;
    meta_j["class_names"] = ds.meta.class_names;
    meta_j["n_trials"] = ds.meta.n_trials;
    meta_j["samples_per_trial"] = ds.meta.samples_per_trial;
    meta_j["schema_version"] = ds.meta.schema_version;
    if (!ds.meta.sessions.empty()) meta_j["sessions"] = ds.meta.sessions;
    write_text(dir / "meta.json", meta_j.dump(2) + "\n");

    std::ofstream bin(dir / "trials.bin", std::ios::binary);
    if (!bin) throw ArgumentError("cannot write trials.bin");
    for (const Matrix& m : ds.trials) {
        for (Eigen::Index c = 0; c < m.rows(); ++c)
            for (Eigen::Index t = 0; t < m.cols(); ++t) {
                const float v = static_cast<float>(m(c, t));
                bin.write(reinterpret_cast<const char*>(&v), sizeof(float));
            }
    }
    bin.close();

    write_text(dir / "labels.json", json(ds.labels).dump() + "\n");
}

namespace {

/// Length-L moving average of white noise: unit-variance colored noise with
/// energy concentrated below roughly fs/L.
Vector colored_noise(int T, int L, rng::Engine& eng) {
    Vector w(T + L - 1);
    for (int t = 0; t < T + L - 1; ++t) w(t) = rng::normal(eng);
    Vector out(T);
    const double scale = 1.0 / std::sqrt(static_cast<double>(L));
    for (int t = 0; t < T; ++t) {
        double s = 0.0;
        for (int k = 0; k < L; ++k) s += w(t + k);
        out(t) = scale * s;
    }
    return out;
}

}  // namespace

Dataset synth_generate(const SynthSpec& spec) {
    require(spec.separation > 0.0, "synth: separation must be positive");
    require(spec.classes >= 2, "synth: need at least two classes");
    require(spec.trials_per_class >= 1, "synth: need at least one trial");
    require(spec.channels >= 2, "synth: need at least two channels");
    require(spec.samples >= 16, "synth: need at least 16 samples");
    require(spec.fs > 0.0, "synth: fs must be positive");

    rng::Engine eng(spec.seed);
    const int C = spec.channels;
    const int T = spec.samples;

    // shared orthogonal source basis
    Matrix g = rng::gaussian_matrix(C, C, eng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();

    // class-specific sign patterns over source log-variances; source i gets
    // variance exp(+-separation/2), so the log-variance gap between the two
    // states equals `separation`. Patterns are redrawn until distinct.
    std::vector<std::vector<int>> patterns;
    for (int c = 0; c < spec.classes; ++c) {
        std::vector<int> pat(static_cast<std::size_t>(C));
        do {
            for (int i = 0; i < C; ++i)
                pat[static_cast<std::size_t>(i)] =
                    rng::unit(eng) < 0.5 ? -1 : 1;
        } while (std::find(patterns.begin(), patterns.end(), pat) !=
                 patterns.end());
        patterns.push_back(pat);
    }
    std::vector<Vector> gains(static_cast<std::size_t>(spec.classes));
    for (int c = 0; c < spec.classes; ++c) {
        Vector& gain = gains[static_cast<std::size_t>(c)];
        gain.resize(C);
        for (int i = 0; i < C; ++i)
            gain(i) = std::exp(0.25 * spec.separation *
                               patterns[static_cast<std::size_t>(c)]
                                       [static_cast<std::size_t>(i)]);
    }

    // shared background mixing, fixed across classes
    Matrix background =
        0.35 / std::sqrt(static_cast<double>(C)) *
        rng::gaussian_matrix(C, C, eng);

    const int smooth = std::max(2, static_cast<int>(spec.fs / 40.0));

    Dataset ds;
    ds.meta.fs = spec.fs;
    ds.meta.n_trials = spec.classes * spec.trials_per_class;
    ds.meta.samples_per_trial = T;
    for (int c = 0; c < C; ++c)
        ds.meta.channel_names.push_back("ch" + std::to_string(c));
    for (int k = 0; k < spec.classes; ++k)
        ds.meta.class_names.push_back("class" + std::to_string(k));

    for (int k = 0; k < spec.classes; ++k) {
        Matrix mix = q * gains[static_cast<std::size_t>(k)].asDiagonal();
        for (int rep = 0; rep < spec.trials_per_class; ++rep) {
            Matrix sources(C, T), noise(C, T);
            for (int i = 0; i < C; ++i) {
                sources.row(i) = colored_noise(T, smooth, eng).transpose();
                noise.row(i) = colored_noise(T, smooth, eng).transpose();
            }
            Matrix x = mix * sources + background * noise;
            for (int c = 0; c < C; ++c)
                for (int t = 0; t < T; ++t)
                    x(c, t) += 0.01 * rng::normal(eng);
            ds.trials.push_back(std::move(x));
            ds.labels.push_back(k);
        }
    }
    return ds;
}

std::vector<int> SplitPlan::train_indices(int fold) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] >= 0 && assignment[i] != fold)
            out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> SplitPlan::test_indices(int fold) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] == fold) out.push_back(static_cast<int>(i));
    return out;
}

SplitPlan kfold_split(int n, int k, std::uint64_t seed) {
    require(n >= 1, "kfold_split: n must be positive");
    require(k >= 1 && k <= n, "kfold_split: need 1 <= k <= n");
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    rng::Engine eng(seed);
    rng::shuffle(order, eng);

    SplitPlan plan;
    plan.folds = k;
    plan.assignment.assign(static_cast<std::size_t>(n), 0);
    // first (n mod k) folds get one extra trial
    const int base = n / k, extra = n % k;
    int pos = 0;
    for (int fold = 0; fold < k; ++fold) {
        const int size = base + (fold < extra ? 1 : 0);
        for (int j = 0; j < size; ++j)
            plan.assignment[static_cast<std::size_t>(order[static_cast<std::size_t>(pos++)])] =
                fold;
    }
    return plan;
}

SplitPlan holdout_split(const std::vector<int>& sessions, int train_session,
                        int test_session) {
    require(!sessions.empty(), "holdout_split: empty session list");
    require(train_session != test_session,
            "holdout_split: train and test sessions must differ");
    SplitPlan plan;
    plan.folds = 1;
    plan.assignment.assign(sessions.size(), -1);
    int train_count = 0, test_count = 0;
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        if (sessions[i] == train_session) {
            plan.assignment[i] = 1;  // not fold 0 -> training side
            ++train_count;
        } else if (sessions[i] == test_session) {
            plan.assignment[i] = 0;  // fold 0 is the test fold
            ++test_count;
        }
    }
    require(train_count > 0, "holdout_split: training session has no trials");
    require(test_count > 0, "holdout_split: test session has no trials");
    return plan;
}

Metrics metrics(const std::vector<int>& predictions,
                const std::vector<int>& labels, int classes) {
    require(predictions.size() == labels.size(),
            "metrics: predictions/labels length mismatch");
    require(!labels.empty(), "metrics: empty inputs");
    require(classes >= 1, "metrics: classes must be positive");
    Metrics m;
    m.confusion = Matrix::Zero(classes, classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        require(labels[i] >= 0 && labels[i] < classes,
                "metrics: label out of range");
        require(predictions[i] >= 0 && predictions[i] < classes,
                "metrics: prediction out of range");
        m.confusion(labels[i], predictions[i]) += 1.0;
    }
    m.accuracy = m.confusion.trace() / static_cast<double>(labels.size());
    return m;
}

}  // namespace cspnet::data
