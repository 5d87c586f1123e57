#include "artic/training/dataset.hpp"

#include <algorithm>
#include <numeric>

#include "artic/error.hpp"

namespace artic::training {

FrameDataset::FrameDataset(std::vector<InputStream> inputs, std::vector<std::vector<std::int32_t>> labels)
    : inputs_(std::move(inputs)), labels_(std::move(labels)) {
    build_index();
}

FrameDataset::FrameDataset(std::vector<InputStream> inputs, std::vector<dsp::FeatureMatrix> targets)
    : inputs_(std::move(inputs)), targets_(std::move(targets)) {
    build_index();
}

void FrameDataset::build_index() {
    if (inputs_.empty()) throw ConfigError("dataset needs at least one input stream");
    const std::size_t n_utts = inputs_.front().utterances.size();
    for (const auto& in : inputs_) {
        if (in.utterances.size() != n_utts) throw LengthError("input streams hold different utterance counts");
        for (const auto& m : in.utterances)
            if (m.dim() != in.frame_dim()) throw DimensionError("utterances of one stream differ in width");
    }
    const std::size_t n_targets = labels_.empty() ? targets_.size() : labels_.size();
    if (n_targets != n_utts) throw LengthError("target count does not match utterance count");

    for (std::size_t u = 0; u < n_utts; ++u) {
        const std::size_t frames = inputs_.front().utterances[u].frames();
        for (const auto& in : inputs_)
            if (in.utterances[u].frames() != frames)
                throw LengthError("utterance " + std::to_string(u) + ": input streams differ in frame count");
        const std::size_t t_frames = labels_.empty() ? targets_[u].frames() : labels_[u].size();
        if (t_frames != frames)
            throw LengthError("utterance " + std::to_string(u) + ": " + std::to_string(t_frames) +
                              " targets for " + std::to_string(frames) + " frames");
        if (!targets_.empty() && targets_[u].dim() != targets_.front().dim())
            throw DimensionError("regression targets differ in width");
        for (std::size_t t = 0; t < frames; ++t)
            index_.push_back({static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(t)});
    }
}

std::vector<std::size_t> FrameDataset::input_dims() const {
    std::vector<std::size_t> dims;
    for (const auto& in : inputs_) dims.push_back(in.spliced_dim());
    return dims;
}

Batch FrameDataset::gather(std::span<const std::size_t> frame_ids) const {
    const std::size_t n = frame_ids.size();
    Batch b;
    for (const auto& in : inputs_) {
        const std::size_t d = in.frame_dim();
        const auto left = static_cast<std::ptrdiff_t>(in.splice.left);
        const auto right = static_cast<std::ptrdiff_t>(in.splice.right);
        nn::Tensor<float> x = nn::Tensor<float>::matrix(n, in.spliced_dim());
        for (std::size_t r = 0; r < n; ++r) {
            const FrameRef ref = index_.at(frame_ids[r]);
            const dsp::FeatureMatrix& m = in.utterances[ref.utt];
            const auto last = static_cast<std::ptrdiff_t>(m.frames()) - 1;
            float* out = x.row(r).data();
            for (std::ptrdiff_t c = -left; c <= right; ++c) {
                const auto src = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(ref.frame + c, 0, last));
                const auto row = m.row(src);
                std::transform(row.begin(), row.end(), out, [](double v) { return static_cast<float>(v); });
                out += d;
            }
        }
        b.inputs.push_back(std::move(x));
    }
    if (!labels_.empty()) {
        b.labels.resize(n);
        for (std::size_t r = 0; r < n; ++r) {
            const FrameRef ref = index_[frame_ids[r]];
            b.labels[r] = labels_[ref.utt][ref.frame];
        }
    } else {
        const std::size_t d = targets_.front().dim();
        b.targets = nn::Tensor<float>::matrix(n, d);
        for (std::size_t r = 0; r < n; ++r) {
            const FrameRef ref = index_[frame_ids[r]];
            const auto row = targets_[ref.utt].row(ref.frame);
            for (std::size_t k = 0; k < d; ++k) b.targets(r, k) = static_cast<float>(row[k]);
        }
    }
    return b;
}

Batch FrameDataset::gather_range(std::size_t begin, std::size_t end) const {
    std::vector<std::size_t> ids(end - begin);
    std::iota(ids.begin(), ids.end(), begin);
    return gather(ids);
}

}  // namespace artic::training
