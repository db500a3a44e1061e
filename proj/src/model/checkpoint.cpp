#include "lexmae/model/checkpoint.hpp"

#include "lexmae/util/binary_io.hpp"
#include "lexmae/util/errors.hpp"
#include "lexmae/util/files.hpp"

namespace lexmae::model {

namespace {
constexpr std::string_view kMagic = "LXMAECKP";
}

std::string serialize_checkpoint(const TransformerWeights& weights, std::uint64_t provenance)
{
    const auto& c = weights.config();
    util::BinaryWriter w;
    w.put_bytes(kMagic);
    w.put(kCheckpointVersion);
    for (auto v : {c.vocab_size, c.hidden_size, c.encoder_layers, c.decoder_layers, c.attention_heads,
                   c.max_sequence_length, c.ffn_multiplier}) {
        w.put(static_cast<std::uint32_t>(v));
    }
    w.put(c.init_std);
    w.put(c.layer_norm_epsilon);
    w.put(static_cast<std::uint32_t>(weights.layout()));
    w.put(provenance);
    w.put(static_cast<std::uint32_t>(weights.parameters().size()));
    for (const auto& p : weights.parameters()) {
        w.put_string(p.name);
        w.put(static_cast<std::uint32_t>(p.value.rank()));
        for (auto e : p.value.shape()) {
            w.put(static_cast<std::uint32_t>(e));
        }
        for (double v : p.value.values()) {
            w.put(v);
        }
    }
    w.seal();
    return w.bytes();
}

Checkpoint deserialize_checkpoint(std::string_view bytes)
{
    util::BinaryReader header(bytes);
    if (header.get_bytes(kMagic.size()) != kMagic) {
        throw format_error("not a lexmae checkpoint (bad magic)");
    }
    if (auto version = header.get<std::uint32_t>(); version != kCheckpointVersion) {
        throw unsupported_version_error("unsupported checkpoint version " + std::to_string(version) + " (expected "
                                        + std::to_string(kCheckpointVersion) + ")");
    }
    util::BinaryReader r(util::verify_sealed(bytes));
    r.get_bytes(kMagic.size());
    r.get<std::uint32_t>();
    ModelConfig c;
    c.vocab_size = r.get<std::uint32_t>();
    c.hidden_size = r.get<std::uint32_t>();
    c.encoder_layers = r.get<std::uint32_t>();
    c.decoder_layers = r.get<std::uint32_t>();
    c.attention_heads = r.get<std::uint32_t>();
    c.max_sequence_length = r.get<std::uint32_t>();
    c.ffn_multiplier = r.get<std::uint32_t>();
    c.init_std = r.get<double>();
    c.layer_norm_epsilon = r.get<double>();
    const auto layout_raw = r.get<std::uint32_t>();
    if (layout_raw > static_cast<std::uint32_t>(LmHeadLayout::extra_bottleneck)) {
        throw format_error("unknown LM head layout code " + std::to_string(layout_raw));
    }
    Checkpoint out;
    out.provenance = r.get<std::uint64_t>();
    const auto count = r.get<std::uint32_t>();
    std::vector<std::pair<std::string, ad::Tensor>> tensors;
    tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        auto name = r.get_string();
        const auto rank = r.get<std::uint32_t>();
        if (rank == 0 || rank > 2) {
            throw format_error("tensor '" + name + "' has unsupported rank " + std::to_string(rank));
        }
        ad::Shape shape;
        for (std::uint32_t k = 0; k < rank; ++k) {
            shape.push_back(r.get<std::uint32_t>());
        }
        const std::size_t n = ad::shape_size(shape);
        if (n * sizeof(double) > r.remaining()) {
            throw format_error("tensor '" + name + "' runs past the end of the file");
        }
        std::vector<double> values(n);
        for (auto& v : values) {
            v = r.get<double>();
        }
        tensors.emplace_back(std::move(name), ad::Tensor(std::move(shape), std::move(values)));
    }
    if (r.remaining() != 0) {
        throw format_error("trailing bytes after the last tensor");
    }
    try {
        out.weights = TransformerWeights(c, static_cast<LmHeadLayout>(layout_raw), 0);
        out.weights.assign(tensors);
    }
    catch (const contract_error& e) {
        throw format_error(std::string("checkpoint does not match its own config: ") + e.what());
    }
    catch (const config_error& e) {
        throw format_error(std::string("checkpoint holds an invalid model config: ") + e.what());
    }
    return out;
}

void save_checkpoint(const std::filesystem::path& path, const TransformerWeights& weights, std::uint64_t provenance)
{
    util::write_file_atomic(path, serialize_checkpoint(weights, provenance));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return deserialize_checkpoint(util::read_file(path)); }

}  // namespace lexmae::model
