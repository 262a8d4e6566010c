#include "spdnet/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <json.hpp>

namespace spdnet {
using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'S', 'P', 'D', 'N', 'E', 'T', 'C', 'K'};

std::string dtype_name(torch::ScalarType t) {
    switch (t) {
        case torch::kFloat32: return "f4";
        case torch::kFloat64: return "f8";
        case torch::kInt64: return "i8";
        case torch::kUInt8: return "u1";
        default: throw InvalidArgument(std::string("checkpoint: unsupported dtype ") + c10::toString(t));
    }
}

torch::ScalarType dtype_from(const std::string& s) {
    if (s == "f4") return torch::kFloat32;
    if (s == "f8") return torch::kFloat64;
    if (s == "i8") return torch::kInt64;
    if (s == "u1") return torch::kUInt8;
    throw CorruptFileError("checkpoint: unknown dtype '" + s + "'");
}

template <class T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

template <class T>
T get(const std::string& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw CorruptFileError("checkpoint truncated");
    T v;
    std::memcpy(&v, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

std::uint32_t crc(const std::string& s, std::size_t n) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(n)));
}

// Adam keys its state by tensor identity; the parameter order of the group is
// the stable handle.
const std::vector<torch::Tensor>& adam_params(torch::optim::Adam& opt) {
    if (opt.param_groups().size() != 1) throw InvalidArgument("expected a single parameter group");
    return opt.param_groups().front().params();
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    json header;
    header["kind"] = ck.kind;
    header["config"] = json::parse(config_to_json(ck.config));
    header["epoch"] = ck.epoch;
    header["step"] = ck.step;
    header["components"] = ck.components;
    std::string blob;
    json index = json::array();
    for (const auto& [name, t0] : ck.tensors) {
        auto t = t0.detach().contiguous().cpu();
        const auto nbytes = static_cast<std::size_t>(t.numel()) * t.element_size();
        index.push_back({{"name", name},
                         {"dtype", dtype_name(t.scalar_type())},
                         {"shape", t.sizes().vec()},
                         {"offset", blob.size()},
                         {"nbytes", nbytes}});
        blob.append(static_cast<const char*>(t.data_ptr()), nbytes);
    }
    header["tensors"] = index;
    const auto text = header.dump();

    std::string out(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint64_t>(out, text.size());
    out += text;
    out += blob;
    put<std::uint32_t>(out, crc(out, out.size()));

    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw IoError("cannot write checkpoint " + path.string());
        f.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!f) throw IoError("short write to " + path.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move checkpoint into place: " + ec.message());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read checkpoint " + path.string());
    std::string in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (in.size() < sizeof(kMagic) || std::memcmp(in.data(), kMagic, sizeof(kMagic)) != 0)
        throw CorruptFileError(path.string() + " is not a checkpoint");
    std::size_t pos = sizeof(kMagic);
    const auto version = get<std::uint32_t>(in, pos);
    if (version != kCheckpointVersion)
        throw VersionError("checkpoint format version " + std::to_string(version) + ", this build reads " +
                           std::to_string(kCheckpointVersion));
    const auto hlen = get<std::uint64_t>(in, pos);
    if (in.size() < sizeof(std::uint32_t) || pos + hlen > in.size() - sizeof(std::uint32_t))
        throw CorruptFileError("checkpoint truncated");
    std::size_t tail = in.size() - sizeof(std::uint32_t);
    const auto stored = get<std::uint32_t>(in, tail);
    if (stored != crc(in, in.size() - sizeof(std::uint32_t))) throw CorruptFileError("checkpoint checksum mismatch");

    json header;
    try {
        header = json::parse(in.substr(pos, hlen));
    } catch (const json::exception& e) {
        throw CorruptFileError(std::string("checkpoint header: ") + e.what());
    }
    pos += hlen;
    const auto blob_begin = pos;
    const auto blob_size = in.size() - sizeof(std::uint32_t) - blob_begin;

    Checkpoint ck;
    try {
        ck.kind = header.at("kind").get<std::string>();
        ck.config = config_from_json(header.at("config").dump(), preset_by_name(header.at("config").value("preset", "paper")));
        ck.epoch = header.at("epoch").get<std::int64_t>();
        ck.step = header.at("step").get<std::int64_t>();
        ck.components = header.at("components").get<std::vector<std::string>>();
        for (const auto& e : header.at("tensors")) {
            const auto offset = e.at("offset").get<std::size_t>();
            const auto nbytes = e.at("nbytes").get<std::size_t>();
            if (offset + nbytes > blob_size) throw CorruptFileError("tensor extends past the blob");
            auto t = torch::empty(e.at("shape").get<std::vector<std::int64_t>>(),
                                  torch::TensorOptions().dtype(dtype_from(e.at("dtype").get<std::string>())));
            if (static_cast<std::size_t>(t.numel()) * t.element_size() != nbytes)
                throw CorruptFileError("tensor size disagrees with its shape");
            std::memcpy(t.data_ptr(), in.data() + blob_begin + offset, nbytes);
            ck.tensors.emplace(e.at("name").get<std::string>(), std::move(t));
        }
    } catch (const json::exception& e) {
        throw CorruptFileError(std::string("checkpoint header: ") + e.what());
    }
    return ck;
}

void store_model(Checkpoint& ck, const SpdNetImpl& m) {
    ck.components = m.components();
    for (const auto& [name, t] : m.named_state()) ck.tensors["model/" + name] = t.detach().clone();
}

void restore_model(SpdNetImpl& m, const Checkpoint& ck) {
    for (const auto& c : m.components())
        if (std::find(ck.components.begin(), ck.components.end(), c) == ck.components.end())
            throw MissingComponentError("checkpoint has no '" + c + "' weights");
    torch::NoGradGuard no_grad;
    for (auto& [name, t] : m.named_state()) {
        auto it = ck.tensors.find("model/" + name);
        if (it == ck.tensors.end()) throw MissingComponentError("checkpoint lacks tensor " + name);
        if (!it->second.sizes().equals(t.sizes()))
            throw ShapeMismatch("tensor " + name + ": checkpoint " + c10::str(it->second.sizes()) + " vs model " +
                                c10::str(t.sizes()));
        t.copy_(it->second);
    }
}

void store_adam(Checkpoint& ck, const std::string& prefix, torch::optim::Adam& opt) {
    const auto& params = adam_params(opt);
    auto& state = opt.state();
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto it = state.find(params[i].unsafeGetTensorImpl());
        if (it == state.end()) continue;
        auto& s = static_cast<torch::optim::AdamParamState&>(*it->second);
        const auto key = prefix + "/" + std::to_string(i);
        ck.tensors[key + "/step"] = torch::tensor({s.step()}, torch::kInt64);
        ck.tensors[key + "/exp_avg"] = s.exp_avg().detach().clone();
        ck.tensors[key + "/exp_avg_sq"] = s.exp_avg_sq().detach().clone();
    }
}

void restore_adam(torch::optim::Adam& opt, const std::string& prefix, const Checkpoint& ck) {
    const auto& params = adam_params(opt);
    auto& state = opt.state();
    state.clear();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto key = prefix + "/" + std::to_string(i);
        auto step = ck.tensors.find(key + "/step");
        if (step == ck.tensors.end()) continue;
        auto avg = ck.tensors.find(key + "/exp_avg");
        auto sq = ck.tensors.find(key + "/exp_avg_sq");
        if (avg == ck.tensors.end() || sq == ck.tensors.end())
            throw CorruptFileError("incomplete optimizer state for " + key);
        if (!avg->second.sizes().equals(params[i].sizes()))
            throw ShapeMismatch("optimizer state " + key + " does not match its parameter");
        auto s = std::make_unique<torch::optim::AdamParamState>();
        s->step(step->second.item<std::int64_t>());
        s->exp_avg(avg->second.clone());
        s->exp_avg_sq(sq->second.clone());
        state[params[i].unsafeGetTensorImpl()] = std::move(s);
    }
}

void store_generator(Checkpoint& ck, const at::Generator& gen) {
    ck.tensors["rng"] = gen.get_state().clone();
}

void restore_generator(at::Generator& gen, const Checkpoint& ck) {
    auto it = ck.tensors.find("rng");
    if (it == ck.tensors.end()) throw MissingComponentError("checkpoint carries no generator state");
    gen.set_state(it->second);
}

SpdNet model_from_checkpoint(const Checkpoint& ck) {
    if (ck.kind != kKindModel) throw SchemaError("checkpoint kind '" + ck.kind + "' holds no network");
    SpdNet m(ck.config);
    restore_model(*m, ck);
    return m;
}

}  // namespace spdnet
