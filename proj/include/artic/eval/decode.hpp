#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "artic/nn/tensor.hpp"

namespace artic::eval {

/// Per-frame argmax (lowest index wins ties), repeats collapsed, class 0
/// (silence) dropped. tokens[k] names class k.
std::vector<std::string> greedy_decode(const nn::Tensor<float>& posteriors, const std::vector<std::string>& tokens);

/// Same rule applied to a frame label sequence.
std::vector<std::string> collapse_labels(const std::vector<std::int32_t>& labels,
                                         const std::vector<std::string>& tokens);

struct WerReport {
    std::size_t substitutions = 0;
    std::size_t deletions = 0;
    std::size_t insertions = 0;
    std::size_t n_ref_words = 0;

    std::size_t errors() const { return substitutions + deletions + insertions; }
    double wer_percent() const;
    WerReport& operator+=(const WerReport& o);
    bool operator==(const WerReport&) const = default;
};

/// Minimum edit alignment with unit costs. Among equally cheap alignments
/// the one with the fewest substitutions is reported, which makes the
/// counts symmetric: swapping ref and hyp swaps deletions and insertions.
/// Throws LengthError for an empty reference.
WerReport levenshtein_wer(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);

/// Line-delimited transcripts: "<utterance-id> word word ...".
std::map<std::string, std::vector<std::string>> read_transcripts(const std::filesystem::path& path);
void write_transcripts(const std::filesystem::path& path,
                       const std::map<std::string, std::vector<std::string>>& transcripts);

/// Sums the reports of every reference utterance; a missing hypothesis
/// counts as empty.
WerReport score_transcripts(const std::map<std::string, std::vector<std::string>>& ref,
                            const std::map<std::string, std::vector<std::string>>& hyp);

struct ResultRow {
    std::string arch;
    std::string features;
    std::string train_data;
    double value = 0.0;
};

enum class MetricDirection { lower_is_better, higher_is_better };

struct TableOptions {
    std::string metric_name = "WER (%)";
    MetricDirection direction = MetricDirection::lower_is_better;
    int precision = 1;
};

/// One table block per training-data panel (in first-appearance order) with
/// columns AM | Features | Train. Data | metric. The best value of each
/// panel is set in **bold**; every tied row is marked.
std::string results_table(const std::vector<ResultRow>& rows, const TableOptions& opts = {});

/// Row indices marked best, computed with the same rule as results_table.
std::vector<std::size_t> best_rows(const std::vector<ResultRow>& rows, MetricDirection direction);

}  // namespace artic::eval
