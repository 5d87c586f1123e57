#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "artic/dsp/features.hpp"
#include "artic/dsp/types.hpp"
#include "artic/nn/tensor.hpp"

namespace artic::training {

/// Per-utterance features for one network input; spliced on demand.
struct InputStream {
    std::vector<dsp::FeatureMatrix> utterances;
    dsp::SpliceSpec splice{8, 8};

    std::size_t frame_dim() const { return utterances.empty() ? 0 : utterances.front().dim(); }
    std::size_t spliced_dim() const { return frame_dim() * splice.width(); }
};

struct Batch {
    std::vector<nn::Tensor<float>> inputs;  // one per network input
    std::vector<std::int32_t> labels;       // classification targets
    nn::Tensor<float> targets;              // regression targets (N x D)

    std::size_t size() const { return inputs.empty() ? 0 : inputs.front().rows(); }
};

/// Frames of a set of utterances with per-frame targets. Every input stream
/// and target must have the same frame count per utterance.
class FrameDataset {
public:
    FrameDataset() = default;
    FrameDataset(std::vector<InputStream> inputs, std::vector<std::vector<std::int32_t>> labels);
    FrameDataset(std::vector<InputStream> inputs, std::vector<dsp::FeatureMatrix> targets);

    std::size_t size() const { return index_.size(); }
    bool empty() const { return index_.empty(); }
    std::size_t n_inputs() const { return inputs_.size(); }
    std::size_t n_utterances() const { return inputs_.empty() ? 0 : inputs_.front().utterances.size(); }
    bool has_labels() const { return !labels_.empty(); }
    std::vector<std::size_t> input_dims() const;

    /// Assembles the frames with the given global ids, in order.
    Batch gather(std::span<const std::size_t> frame_ids) const;
    /// Frames [begin, end) of the canonical order.
    Batch gather_range(std::size_t begin, std::size_t end) const;

private:
    void build_index();

    struct FrameRef {
        std::uint32_t utt;
        std::uint32_t frame;
    };
    std::vector<InputStream> inputs_;
    std::vector<std::vector<std::int32_t>> labels_;
    std::vector<dsp::FeatureMatrix> targets_;
    std::vector<FrameRef> index_;
};

}  // namespace artic::training
