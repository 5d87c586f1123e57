#include "artic/eval/decode.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <utility>

#include "artic/error.hpp"

namespace artic::eval {

namespace {

const std::string& token_of(std::size_t k, const std::vector<std::string>& tokens) {
    if (k >= tokens.size())
        throw LabelError("class " + std::to_string(k) + " has no token (map covers " +
                         std::to_string(tokens.size()) + " classes)");
    return tokens[k];
}

}  // namespace

std::vector<std::string> greedy_decode(const nn::Tensor<float>& posteriors, const std::vector<std::string>& tokens) {
    if (posteriors.rows() > 0 && posteriors.cols() > tokens.size())
        throw LabelError("token map covers fewer classes than the posteriors");
    std::vector<std::int32_t> labels(posteriors.rows());
    for (std::size_t t = 0; t < posteriors.rows(); ++t) {
        const auto row = posteriors.row(t);
        labels[t] = static_cast<std::int32_t>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return collapse_labels(labels, tokens);
}

std::vector<std::string> collapse_labels(const std::vector<std::int32_t>& labels,
                                         const std::vector<std::string>& tokens) {
    std::vector<std::string> out;
    std::int32_t prev = -1;
    for (const std::int32_t k : labels) {
        if (k < 0) throw LabelError("negative class label");
        if (k != prev && k != 0) out.push_back(token_of(static_cast<std::size_t>(k), tokens));
        prev = k;
    }
    return out;
}

double WerReport::wer_percent() const {
    if (n_ref_words == 0) throw LengthError("WER is undefined for an empty reference");
    return 100.0 * static_cast<double>(errors()) / static_cast<double>(n_ref_words);
}

WerReport& WerReport::operator+=(const WerReport& o) {
    substitutions += o.substitutions;
    deletions += o.deletions;
    insertions += o.insertions;
    n_ref_words += o.n_ref_words;
    return *this;
}

WerReport levenshtein_wer(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
    if (ref.empty()) throw LengthError("WER is undefined for an empty reference");
    const std::size_t R = ref.size(), H = hyp.size();
    // Cell holds (edits, substitutions); compared lexicographically.
    using Cost = std::pair<std::size_t, std::size_t>;
    std::vector<Cost> cell((R + 1) * (H + 1));
    auto at = [&](std::size_t i, std::size_t j) -> Cost& { return cell[i * (H + 1) + j]; };
    for (std::size_t i = 0; i <= R; ++i) at(i, 0) = {i, 0};
    for (std::size_t j = 0; j <= H; ++j) at(0, j) = {j, 0};
    for (std::size_t i = 1; i <= R; ++i)
        for (std::size_t j = 1; j <= H; ++j) {
            const bool same = ref[i - 1] == hyp[j - 1];
            Cost diag = at(i - 1, j - 1);
            if (!same) diag = {diag.first + 1, diag.second + 1};
            const Cost del = {at(i - 1, j).first + 1, at(i - 1, j).second};
            const Cost ins = {at(i, j - 1).first + 1, at(i, j - 1).second};
            at(i, j) = std::min({diag, del, ins});
        }
    const auto [edits, subs] = at(R, H);
    // matches + S + D = R and matches + S + I = H fix D and I given the totals.
    WerReport r;
    r.substitutions = subs;
    const std::size_t indels = edits - subs;
    const auto diff = static_cast<std::ptrdiff_t>(R) - static_cast<std::ptrdiff_t>(H);
    r.deletions = static_cast<std::size_t>((static_cast<std::ptrdiff_t>(indels) + diff) / 2);
    r.insertions = indels - r.deletions;
    r.n_ref_words = R;
    return r;
}

std::map<std::string, std::vector<std::string>> read_transcripts(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open transcript file " + path.string());
    std::map<std::string, std::vector<std::string>> out;
    std::string line;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string id;
        if (!(ls >> id)) continue;
        std::vector<std::string> words;
        for (std::string w; ls >> w;) words.push_back(w);
        if (!out.emplace(id, std::move(words)).second)
            throw FormatError(path.string() + ": duplicate utterance id '" + id + "'");
    }
    return out;
}

void write_transcripts(const std::filesystem::path& path,
                       const std::map<std::string, std::vector<std::string>>& transcripts) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write transcript file " + path.string());
    for (const auto& [id, words] : transcripts) {
        os << id;
        for (const auto& w : words) os << ' ' << w;
        os << '\n';
    }
    if (!os) throw IoError("error writing " + path.string());
}

WerReport score_transcripts(const std::map<std::string, std::vector<std::string>>& ref,
                            const std::map<std::string, std::vector<std::string>>& hyp) {
    WerReport total;
    static const std::vector<std::string> empty;
    for (const auto& [id, words] : ref) {
        if (words.empty()) continue;
        const auto it = hyp.find(id);
        total += levenshtein_wer(words, it == hyp.end() ? empty : it->second);
    }
    return total;
}

std::vector<std::size_t> best_rows(const std::vector<ResultRow>& rows, MetricDirection direction) {
    std::vector<std::size_t> out;
    std::map<std::string, double> best;
    for (const auto& r : rows) {
        auto [it, fresh] = best.emplace(r.train_data, r.value);
        if (!fresh)
            it->second = direction == MetricDirection::lower_is_better ? std::min(it->second, r.value)
                                                                       : std::max(it->second, r.value);
    }
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].value == best.at(rows[i].train_data)) out.push_back(i);
    return out;
}

std::string results_table(const std::vector<ResultRow>& rows, const TableOptions& opts) {
    const auto marked = best_rows(rows, opts.direction);
    std::vector<std::string> panels;
    for (const auto& r : rows)
        if (std::find(panels.begin(), panels.end(), r.train_data) == panels.end()) panels.push_back(r.train_data);

    std::ostringstream os;
    for (std::size_t p = 0; p < panels.size(); ++p) {
        if (p) os << '\n';
        os << "| AM | Features | Train. Data | " << opts.metric_name << " |\n";
        os << "|---|---|---|---:|\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].train_data != panels[p]) continue;
            std::ostringstream v;
            v << std::fixed << std::setprecision(opts.precision) << rows[i].value;
            const bool best = std::find(marked.begin(), marked.end(), i) != marked.end();
            os << "| " << rows[i].arch << " | " << rows[i].features << " | " << rows[i].train_data << " | "
               << (best ? "**" + v.str() + "**" : v.str()) << " |\n";
        }
    }
    return os.str();
}

}  // namespace artic::eval
