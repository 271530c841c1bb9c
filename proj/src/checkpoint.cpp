#include "d2ue/checkpoint.hpp"

#include "d2ue/error.hpp"
#include "d2ue/file_util.hpp"

namespace d2ue {
namespace {

constexpr char kMagic[4] = {'D', '2', 'U', 'E'};

// Sanity cap so a corrupt count cannot trigger a huge allocation.
constexpr std::uint32_t kMaxDims = 8;

}  // namespace

std::vector<std::uint8_t> encode_learner(const Learner& learner) {
    const auto& c = learner.config();
    ByteWriter w;
    w.str(std::string_view(kMagic, 4));
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(c.input_dim));
    w.u32(static_cast<std::uint32_t>(c.hidden_dims.size()));
    for (auto h : c.hidden_dims) w.u32(static_cast<std::uint32_t>(h));
    w.u32(static_cast<std::uint32_t>(c.bottleneck_dim));
    w.u8(c.activation == Activation::relu ? 0 : 1);
    w.i32(c.feature_layer);
    w.u64(c.init_seed);
    w.u8(learner.trained() ? 1 : 0);
    const auto params = learner.parameters();
    w.u32(static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        w.u32(static_cast<std::uint32_t>(p.name.size()));
        w.str(p.name);
        const auto& shape = p.tensor.shape();
        w.u32(static_cast<std::uint32_t>(shape.size()));
        for (auto d : shape) w.u32(static_cast<std::uint32_t>(d));
        for (double v : p.tensor.values()) w.f64(v);
    }
    return std::move(w.buffer());
}

Learner decode_learner(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    if (r.str(4) != std::string_view(kMagic, 4)) throw ParseError("checkpoint: bad magic", 0);
    const std::size_t version_at = r.offset();
    if (const auto version = r.u32(); version != kCheckpointVersion)
        throw ParseError("checkpoint: unsupported version " + std::to_string(version), version_at);

    AutoencoderConfig c;
    c.input_dim = r.u32();
    const std::size_t hidden_at = r.offset();
    const auto n_hidden = r.u32();
    if (n_hidden > r.remaining() / 4) throw ParseError("checkpoint: hidden layer count too large", hidden_at);
    c.hidden_dims.resize(n_hidden);
    for (auto& h : c.hidden_dims) h = r.u32();
    c.bottleneck_dim = r.u32();
    const std::size_t act_at = r.offset();
    const auto act = r.u8();
    if (act > 1) throw ParseError("checkpoint: bad activation code", act_at);
    c.activation = act == 0 ? Activation::relu : Activation::sigmoid;
    c.feature_layer = r.i32();
    c.init_seed = r.u64();
    const bool trained = r.u8() != 0;
    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw ParseError(std::string("checkpoint: invalid config: ") + e.what(), r.offset());
    }

    const auto n_params = r.u32();
    std::vector<Parameter> params;
    for (std::uint32_t k = 0; k < n_params; ++k) {
        Parameter p;
        const std::size_t name_at = r.offset();
        const auto name_len = r.u32();
        if (name_len > r.remaining()) throw ParseError("checkpoint: truncated parameter name", name_at);
        p.name = r.str(name_len);
        const std::size_t rank_at = r.offset();
        const auto rank = r.u32();
        if (rank > kMaxDims) throw ParseError("checkpoint: parameter rank too large", rank_at);
        Shape shape(rank);
        for (auto& d : shape) d = r.u32();
        const std::size_t n = shape_numel(shape);
        if (n > r.remaining() / 8) throw ParseError("checkpoint: truncated values for '" + p.name + "'", r.offset());
        std::vector<double> values(n);
        for (auto& v : values) v = r.f64();
        p.tensor = Tensor::from(std::move(shape), std::move(values));
        params.push_back(std::move(p));
    }
    if (r.remaining() != 0) throw ParseError("checkpoint: trailing bytes", r.offset());
    try {
        return Learner::restore(std::move(c), std::move(params), trained);
    } catch (const ConfigError& e) {
        throw ParseError(std::string("checkpoint: ") + e.what(), r.offset());
    }
}

void save_learner(const std::filesystem::path& path, const Learner& learner) {
    write_file_atomic(path, encode_learner(learner));
}

Learner load_learner(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return decode_learner(bytes);
    } catch (const ParseError& e) {
        throw e.prefixed(path.string() + ": ");
    }
}

}  // namespace d2ue
