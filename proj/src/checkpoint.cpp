#include "kenn/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "json.hpp"
#include "kenn/io.hpp"

namespace kenn {

namespace {

constexpr std::string_view kMagic = "KENNCKPT";

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return v;
}

}  // namespace

std::string encode_checkpoint(const KennModel& model) {
    const auto& k = model.knowledge();
    const auto& spec = model.spec();
    nlohmann::json clauses = nlohmann::json::array();
    for (const auto& c : k.clauses) {
        clauses.push_back({{"clause", canonical_string(c)},
                           {"learnable", c.weight.learnable},
                           {"weight", c.weight.value}});
    }
    nlohmann::json params = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (std::size_t i = 0; i < model.params().size(); ++i) {
        const auto& p = model.params()[i];
        params.push_back({{"name", model.param_names()[i]},
                          {"rows", p.rows()},
                          {"cols", p.cols()},
                          {"offset", offset}});
        offset += p.size() * sizeof(double);
    }
    nlohmann::json header = {
        {"format", "kenn-checkpoint"},
        {"version", 1},
        {"dtype", "float64"},
        {"byte_order", "little"},
        {"catalog", {{"unary", k.catalog.unary()}, {"binary", k.catalog.binary()}}},
        {"model",
         {{"input_dim", spec.input_dim},
          {"hidden", spec.hidden},
          {"ke_layers", spec.ke_layers},
          {"share_weights", spec.share_weights},
          {"temperature", spec.temperature},
          {"binary_saturation", spec.binary_saturation}}},
        {"clauses", clauses},
        {"parameters", params},
        {"blob_bytes", offset},
    };
    const std::string text = header.dump();

    std::string out(kMagic);
    put_u64(out, text.size());
    out += text;
    for (const auto& p : model.params()) {
        const auto* bytes = reinterpret_cast<const char*>(p.values().data());
        out.append(bytes, p.size() * sizeof(double));
    }
    return out;
}

KennModel decode_checkpoint(const std::string& bytes) {
    if (bytes.size() < 16 || std::string_view(bytes).substr(0, 8) != kMagic) {
        throw DataError("checkpoint: bad magic");
    }
    const std::uint64_t header_len = get_u64(bytes, 8);
    if (16 + header_len > bytes.size()) throw DataError("checkpoint: truncated header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(16, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint: bad header: ") + e.what());
    }
    if (header.value("format", "") != "kenn-checkpoint" || header.value("version", 0) != 1) {
        throw DataError("checkpoint: unsupported format");
    }

    const auto unary = header["catalog"]["unary"].get<std::vector<std::string>>();
    const auto binary = header["catalog"]["binary"].get<std::vector<std::string>>();
    Knowledge k;
    k.catalog = Catalog(unary, binary);
    for (const auto& c : header["clauses"]) {
        Clause clause = parse_clause(c["clause"].get<std::string>(), k.catalog);
        clause.weight = {c["learnable"].get<bool>(), c["weight"].get<double>()};
        k.clauses.push_back(std::move(clause));
        (k.clauses.back().kind == ClauseKind::Unary ? k.unary_clauses : k.binary_clauses)
            .push_back(k.clauses.size() - 1);
    }

    const auto& m = header["model"];
    ModelSpec spec;
    spec.input_dim = m["input_dim"].get<std::size_t>();
    spec.hidden = m["hidden"].get<std::vector<std::size_t>>();
    spec.ke_layers = m["ke_layers"].get<std::size_t>();
    spec.share_weights = m["share_weights"].get<bool>();
    spec.temperature = m["temperature"].get<double>();
    spec.binary_saturation = m["binary_saturation"].get<double>();
    KennModel model(std::move(k), spec, 0);

    const std::size_t blob = 16 + header_len;
    const auto blob_bytes = header["blob_bytes"].get<std::uint64_t>();
    if (blob + blob_bytes != bytes.size()) throw DataError("checkpoint: blob size mismatch");
    std::vector<Tensor> params;
    for (const auto& p : header["parameters"]) {
        const auto rows = p["rows"].get<std::size_t>();
        const auto cols = p["cols"].get<std::size_t>();
        const auto offset = p["offset"].get<std::uint64_t>();
        if (offset + rows * cols * sizeof(double) > blob_bytes) {
            throw DataError("checkpoint: parameter " + p["name"].get<std::string>() +
                            " exceeds the blob");
        }
        std::vector<double> values(rows * cols);
        std::memcpy(values.data(), bytes.data() + blob + offset, values.size() * sizeof(double));
        params.emplace_back(rows, cols, std::move(values));
    }
    model.set_params(std::move(params));
    return model;
}

void save_checkpoint(const KennModel& model, const std::filesystem::path& path) {
    write_file_atomic(path, encode_checkpoint(model));
}

KennModel load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(read_file(path));
}

}  // namespace kenn
