#include "plangen/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace plangen {

namespace {

constexpr char kMagic[8] = {'P', 'G', 'C', 'K', '0', '0', '1', '\n'};

void write_raw(std::ofstream& f, const void* data, size_t bytes) {
    f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

void read_raw(std::ifstream& f, void* data, size_t bytes) {
    f.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(bytes));
    if (static_cast<size_t>(f.gcount()) != bytes)
        throw std::runtime_error("truncated checkpoint");
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    nlohmann::json header;
    header["config"] = nlohmann::json::parse(ckpt.config.to_json());
    header["mode"] = numeric_mode_name(ckpt.mode);
    header["vocab_hash"] = ckpt.vocab_hash;
    header["step"] = ckpt.step;
    header["param_count"] = ckpt.params.size();
    header["has_optimizer"] = ckpt.opt.has_value();
    const std::string h = header.dump();

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
    write_raw(f, kMagic, sizeof(kMagic));
    const uint64_t hlen = h.size();
    write_raw(f, &hlen, sizeof(hlen));
    write_raw(f, h.data(), h.size());
    write_raw(f, ckpt.params.data(), ckpt.params.size() * sizeof(float));
    if (ckpt.opt) {
        if (ckpt.opt->m.size() != ckpt.params.size() ||
            ckpt.opt->v.size() != ckpt.params.size())
            throw std::invalid_argument("optimizer state size mismatch");
        const int64_t opt_step = ckpt.opt->step;
        write_raw(f, &opt_step, sizeof(opt_step));
        write_raw(f, ckpt.opt->m.data(), ckpt.opt->m.size() * sizeof(float));
        write_raw(f, ckpt.opt->v.data(), ckpt.opt->v.size() * sizeof(float));
    }
    if (!f) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    read_raw(f, magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("not a plangen checkpoint: " + path);
    uint64_t hlen = 0;
    read_raw(f, &hlen, sizeof(hlen));
    if (hlen > (1u << 20)) throw std::runtime_error("oversized checkpoint header");
    std::string h(hlen, '\0');
    read_raw(f, h.data(), hlen);
    const auto header = nlohmann::json::parse(h);

    Checkpoint ckpt;
    ckpt.config = ModelConfig::from_json(header.at("config").dump());
    ckpt.mode = numeric_mode_from_name(header.at("mode").get<std::string>());
    ckpt.vocab_hash = header.at("vocab_hash").get<uint64_t>();
    ckpt.step = header.at("step").get<int64_t>();
    ckpt.params.resize(header.at("param_count").get<size_t>());
    read_raw(f, ckpt.params.data(), ckpt.params.size() * sizeof(float));
    if (header.at("has_optimizer").get<bool>()) {
        OptimizerState opt;
        read_raw(f, &opt.step, sizeof(opt.step));
        opt.m.resize(ckpt.params.size());
        opt.v.resize(ckpt.params.size());
        read_raw(f, opt.m.data(), opt.m.size() * sizeof(float));
        read_raw(f, opt.v.data(), opt.v.size() * sizeof(float));
        ckpt.opt = std::move(opt);
    }
    return ckpt;
}

}  // namespace plangen
