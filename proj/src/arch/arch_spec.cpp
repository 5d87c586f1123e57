#include "artic/arch/arch_spec.hpp"

#include <map>

#include "artic/error.hpp"

namespace artic::arch {

std::string_view to_string(ArchKind k) {
    switch (k) {
        case ArchKind::dnn: return "dnn";
        case ArchKind::cnn: return "cnn";
        case ArchKind::tfcnn: return "tfcnn";
        case ArchKind::fcnn: return "fcnn";
    }
    return "?";
}

ArchKind parse_arch_kind(std::string_view name) {
    if (name == "dnn") return ArchKind::dnn;
    if (name == "cnn") return ArchKind::cnn;
    if (name == "tfcnn") return ArchKind::tfcnn;
    if (name == "fcnn") return ArchKind::fcnn;
    throw ConfigError("unknown architecture '" + std::string(name) + "' (expected dnn, cnn, tfcnn or fcnn)");
}

std::string_view to_string(Scale s) { return s == Scale::toy ? "toy" : "paper"; }

Scale parse_scale(std::string_view name) {
    if (name == "toy") return Scale::toy;
    if (name == "paper") return Scale::paper;
    throw ConfigError("unknown scale '" + std::string(name) + "' (expected toy or paper)");
}

void ArchSpec::validate() const {
    auto fail = [this](const std::string& what) {
        throw ConfigError(std::string(to_string(kind)) + " spec: " + what);
    };
    if (n_classes < 2) fail("n_classes must be at least 2");
    if (n_hidden_layers > 0 && hidden_width == 0) fail("hidden_width must be positive");
    if (acoustic.bands == 0 || acoustic.streams == 0 || acoustic.context == 0)
        fail("acoustic layout sizes must be positive");

    auto check_conv = [&](const ConvParams& c, std::size_t extent, const char* name) {
        if (c.n_filters == 0 || c.filter_width == 0 || c.pool_size == 0)
            fail(std::string(name) + " convolution sizes must be positive");
        if (c.filter_width > extent) fail(std::string(name) + " filter wider than its axis");
        if (c.pool_size > extent - c.filter_width + 1) fail(std::string(name) + " pool wider than conv output");
    };

    switch (kind) {
        case ArchKind::dnn:
            break;
        case ArchKind::cnn:
            check_conv(freq_conv, acoustic.bands, "frequency");
            break;
        case ArchKind::tfcnn:
            check_conv(freq_conv, acoustic.bands, "frequency");
            check_conv(time_conv, acoustic.context, "time");
            break;
        case ArchKind::fcnn:
            if (!tv) fail("fcnn requires a TV layout");
            if (tv->tvs == 0 || tv->context == 0) fail("TV layout sizes must be positive");
            check_conv(freq_conv, acoustic.bands, "frequency");
            check_conv(time_conv, tv->context, "time");
            break;
    }
}

ArchSpec paper_spec(ArchKind kind, std::size_t n_classes) {
    ArchSpec s;
    s.kind = kind;
    s.n_hidden_layers = 6;
    s.hidden_width = 2048;
    s.n_classes = n_classes;
    if (kind == ArchKind::fcnn) s.tv = TvLayout{};
    return s;
}

std::size_t toy_width(std::size_t full_width) {
    static const std::map<std::size_t, std::size_t> table = {
        {1024, 64}, {2048, 128}, {200, 16}, {75, 8}};
    if (const auto it = table.find(full_width); it != table.end()) return it->second;
    return std::max<std::size_t>(1, (full_width + 15) / 16);
}

ArchSpec to_toy(const ArchSpec& spec) {
    ArchSpec s = spec;
    s.hidden_width = toy_width(spec.hidden_width);
    s.freq_conv.n_filters = toy_width(spec.freq_conv.n_filters);
    s.time_conv.n_filters = toy_width(spec.time_conv.n_filters);
    return s;
}

ArchSpec default_spec(ArchKind kind, Scale scale, std::size_t n_classes) {
    if (scale == Scale::paper) return paper_spec(kind, n_classes);
    ArchSpec s;  // 4 x 1024 before scaling
    s.kind = kind;
    s.n_classes = n_classes;
    if (kind == ArchKind::fcnn) s.tv = TvLayout{};
    return to_toy(s);
}

void apply_config(ArchSpec& spec, KeyValueConfig& cfg) {
    if (auto v = cfg.take_string("arch")) {
        spec.kind = parse_arch_kind(*v);
        if (spec.kind == ArchKind::fcnn && !spec.tv) spec.tv = TvLayout{};
    }
    if (auto v = cfg.take_count("n_hidden_layers")) spec.n_hidden_layers = *v;
    if (auto v = cfg.take_count("hidden_width")) spec.hidden_width = *v;
    if (auto v = cfg.take_count("n_classes")) spec.n_classes = *v;
    if (auto v = cfg.take_string("activation")) {
        if (*v == "sigmoid") spec.activation = nn::ActivationFn::sigmoid;
        else if (*v == "relu") spec.activation = nn::ActivationFn::relu;
        else throw ConfigError("activation must be sigmoid or relu, got '" + *v + "'");
    }
    if (auto v = cfg.take_count("acoustic_bands")) spec.acoustic.bands = *v;
    if (auto v = cfg.take_count("acoustic_streams")) spec.acoustic.streams = *v;
    if (auto v = cfg.take_count("acoustic_context")) spec.acoustic.context = *v;
    if (auto v = cfg.take_count("tv_count")) {
        if (!spec.tv) spec.tv = TvLayout{};
        spec.tv->tvs = *v;
    }
    if (auto v = cfg.take_count("tv_context")) {
        if (!spec.tv) spec.tv = TvLayout{};
        spec.tv->context = *v;
    }
    if (auto v = cfg.take_count("freq_filters")) spec.freq_conv.n_filters = *v;
    if (auto v = cfg.take_count("freq_filter_width")) spec.freq_conv.filter_width = *v;
    if (auto v = cfg.take_count("freq_pool")) spec.freq_conv.pool_size = *v;
    if (auto v = cfg.take_count("time_filters")) spec.time_conv.n_filters = *v;
    if (auto v = cfg.take_count("time_filter_width")) spec.time_conv.filter_width = *v;
    if (auto v = cfg.take_count("time_pool")) spec.time_conv.pool_size = *v;
}

ArchSpec parse_arch_config(const std::string& text, Scale scale) {
    KeyValueConfig cfg = KeyValueConfig::parse(text, "<arch config>");
    ArchKind kind = ArchKind::dnn;
    if (cfg.has("arch")) {
        KeyValueConfig peek = cfg;
        kind = parse_arch_kind(*peek.take_string("arch"));
    }
    ArchSpec spec = default_spec(kind, scale);
    apply_config(spec, cfg);
    cfg.require_all_consumed();
    spec.validate();
    return spec;
}

}  // namespace artic::arch
