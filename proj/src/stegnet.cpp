#include "vizsteg/stegnet.hpp"

#include <cstdio>
#include <cstring>
#include <memory>

#include <json.hpp>

namespace vizsteg::stegnet {

namespace {

constexpr char kMagic[8] = {'V', 'Z', 'C', 'K', 'P', 'T', '0', '1'};

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void save_checkpoint(const std::string& path, ModelF& model, const std::string& extra_json,
                     const std::vector<NamedTensor>& side) {
    auto params = model.params();
    nlohmann::json header;
    header["format"] = 1;
    header["hyper"] = {{"n_acb", model.cfg.n_acb},
                       {"growth", model.cfg.growth},
                       {"ffb_blocks", model.cfg.ffb_blocks},
                       {"m_qr", model.cfg.m_qr},
                       {"clamp_bound", model.cfg.clamp_bound}};
    nlohmann::json tensors = nlohmann::json::array();
    auto describe = [&tensors](const std::string& name, const nn::Mat<float>& m) {
        tensors.push_back({{"name", name},
                           {"rows", static_cast<long>(m.rows())},
                           {"cols", static_cast<long>(m.cols())}});
    };
    for (const auto& p : params) describe(p.name, *p.value);
    for (const auto& s : side) describe("side." + s.name, *s.mat);
    header["tensors"] = tensors;
    if (!extra_json.empty()) header["extra"] = extra_json;

    const std::string hs = header.dump();
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw Error("cannot write checkpoint: " + path);
    std::fwrite(kMagic, 1, 8, f.get());
    const uint32_t len = static_cast<uint32_t>(hs.size());
    std::fwrite(&len, 4, 1, f.get());
    std::fwrite(hs.data(), 1, hs.size(), f.get());
    auto dump = [&f](const nn::Mat<float>& m) {
        std::fwrite(m.data(), sizeof(float), static_cast<size_t>(m.size()), f.get());
    };
    for (const auto& p : params) dump(*p.value);
    for (const auto& s : side) dump(*s.mat);
    if (std::ferror(f.get())) throw Error("checkpoint write failed: " + path);
}

ModelF load_checkpoint(const std::string& path, std::string* extra_json,
                       const std::vector<NamedTensor>& side) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw Error("cannot open checkpoint: " + path);
    char magic[8];
    if (std::fread(magic, 1, 8, f.get()) != 8 || std::memcmp(magic, kMagic, 8) != 0)
        throw FormatError("not a model checkpoint: " + path);
    uint32_t len = 0;
    if (std::fread(&len, 4, 1, f.get()) != 1 || len > (1u << 24))
        throw FormatError("corrupt checkpoint header: " + path);
    std::string hs(len, '\0');
    if (std::fread(hs.data(), 1, len, f.get()) != len)
        throw FormatError("corrupt checkpoint header: " + path);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hs);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("checkpoint header is not valid JSON: " + std::string(e.what()));
    }
    if (header.value("format", 0) != 1) throw FormatError("unsupported checkpoint format version");

    NetConfig cfg;
    const auto& hy = header.at("hyper");
    cfg.n_acb = hy.at("n_acb").get<int>();
    cfg.growth = hy.at("growth").get<int>();
    cfg.ffb_blocks = hy.at("ffb_blocks").get<int>();
    cfg.m_qr = hy.at("m_qr").get<float>();
    cfg.clamp_bound = hy.at("clamp_bound").get<float>();

    ModelF model;
    model.build(cfg);
    auto params = model.params();
    const auto& tensors = header.at("tensors");
    if (tensors.size() < params.size())
        throw FormatError("checkpoint tensor table does not match the architecture");
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& t = tensors[i];
        if (t.at("name").get<std::string>() != params[i].name ||
            t.at("rows").get<long>() != params[i].value->rows() ||
            t.at("cols").get<long>() != params[i].value->cols())
            throw FormatError("checkpoint tensor '" + t.at("name").get<std::string>() +
                              "' does not match the expected shape table");
    }
    for (auto& p : params) {
        const size_t n = static_cast<size_t>(p.value->size());
        if (std::fread(p.value->data(), sizeof(float), n, f.get()) != n)
            throw FormatError("checkpoint truncated while reading " + p.name);
    }
    // Side tensors (optimizer state). Requested entries must match by name.
    for (size_t i = params.size(); i < tensors.size(); ++i) {
        const auto& t = tensors[i];
        const std::string name = t.at("name").get<std::string>();
        const long rows = t.at("rows").get<long>(), cols = t.at("cols").get<long>();
        nn::Mat<float>* dst = nullptr;
        for (const auto& s : side)
            if ("side." + s.name == name) dst = s.mat;
        if (dst) {
            dst->resize(rows, cols);
            const size_t n = static_cast<size_t>(dst->size());
            if (std::fread(dst->data(), sizeof(float), n, f.get()) != n)
                throw FormatError("checkpoint truncated while reading " + name);
        } else {
            std::fseek(f.get(), static_cast<long>(rows * cols * sizeof(float)), SEEK_CUR);
        }
    }
    if (extra_json) *extra_json = header.value("extra", "");
    model.validate();
    return model;
}

}  // namespace vizsteg::stegnet
