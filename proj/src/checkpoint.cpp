#include "netgan/checkpoint.hpp"

#include "netgan/errors.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace netgan {

const char* to_string(ModelKind kind) { return kind == ModelKind::Gan ? "gan" : "vae"; }

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "gan") return ModelKind::Gan;
    if (name == "vae") return ModelKind::Vae;
    throw InvalidArgument("unknown model kind '" + name + "' (expected gan or vae)");
}

namespace {

constexpr char kMagic[8] = {'N', 'G', 'A', 'N', 'C', 'K', 'P', 'T'};

class Writer {
public:
    template <class T>
    void pod(const T& v) {
        const auto* p = reinterpret_cast<const char*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }
    void bytes(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
    void string(const std::string& s) {
        pod<std::uint64_t>(s.size());
        bytes(s.data(), s.size());
    }
    void matrix(const Matrix& m) {
        pod<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
        pod<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
        bytes(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double));
    }
    std::vector<char>& buffer() { return buf_; }

private:
    std::vector<char> buf_;
};

CheckpointError corrupt(const std::string& path, const std::string& why) {
    return CheckpointError(CheckpointError::Kind::Corrupt, "checkpoint '" + path + "' is corrupt: " + why);
}

class Reader {
public:
    Reader(const std::vector<char>& buf, std::size_t end, std::string path) : buf_(buf), end_(end), path_(std::move(path)) {}

    template <class T>
    T pod() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string string() {
        const auto n = pod<std::uint64_t>();
        need(n);
        std::string s(buf_.data() + pos_, static_cast<std::size_t>(n));
        pos_ += static_cast<std::size_t>(n);
        return s;
    }
    Matrix matrix() {
        const auto rows = pod<std::uint64_t>();
        const auto cols = pod<std::uint64_t>();
        if (rows > (1u << 24) || cols > (1u << 24)) throw corrupt(path_, "implausible tensor shape");
        const auto count = static_cast<std::size_t>(rows * cols);
        need(count * sizeof(double));
        Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        std::memcpy(m.data(), buf_.data() + pos_, count * sizeof(double));
        pos_ += count * sizeof(double);
        return m;
    }
    [[nodiscard]] bool done() const { return pos_ == end_; }

private:
    void need(std::size_t n) const {
        if (n > end_ - pos_) throw corrupt(path_, "unexpected end of data");
    }
    const std::vector<char>& buf_;
    std::size_t pos_ = 0;
    std::size_t end_;
    std::string path_;
};

using NamedConst = std::vector<std::pair<std::string, const Matrix*>>;
using NamedMut = std::vector<std::pair<std::string, Matrix*>>;

template <class Named, class Gan, class Vae>
Named collect(Gan* gan, Vae* vae) {
    Named out;
    if (gan) {
        for (auto& [name, p] : gan->G.named_parameters()) out.emplace_back("G." + name, p);
        for (auto& [name, p] : gan->D.named_parameters()) out.emplace_back("D." + name, p);
    } else {
        for (auto& [name, p] : vae->encoder.named_parameters()) out.emplace_back("encoder." + name, p);
        for (auto& [name, p] : vae->decoder.named_parameters()) out.emplace_back("decoder." + name, p);
    }
    return out;
}

Matrix history_matrix(const Checkpoint& ck) {
    if (const auto* gan = std::get_if<GanModel>(&ck.model)) {
        Matrix h(static_cast<Eigen::Index>(gan->history.size()), 2);
        for (std::size_t e = 0; e < gan->history.size(); ++e) {
            h(static_cast<Eigen::Index>(e), 0) = gan->history[e].d_loss;
            h(static_cast<Eigen::Index>(e), 1) = gan->history[e].g_loss;
        }
        return h;
    }
    const auto& vae = std::get<VaeModel>(ck.model);
    Matrix h(static_cast<Eigen::Index>(vae.history.size()), 3);
    for (std::size_t e = 0; e < vae.history.size(); ++e) {
        h(static_cast<Eigen::Index>(e), 0) = vae.history[e].total;
        h(static_cast<Eigen::Index>(e), 1) = vae.history[e].recon_term;
        h(static_cast<Eigen::Index>(e), 2) = vae.history[e].kl_term;
    }
    return h;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    Writer w;
    w.bytes(kMagic, sizeof(kMagic));
    w.pod<std::uint32_t>(kCheckpointFormatVersion);
    w.string(to_string(ck.kind()));
    w.string(ck.config.render());
    w.matrix(ck.stats.min);
    w.matrix(ck.stats.max);

    const auto* gan = std::get_if<GanModel>(&ck.model);
    const auto* vae = std::get_if<VaeModel>(&ck.model);
    const auto named = collect<NamedConst>(gan, vae);
    w.pod<std::uint64_t>(named.size());
    for (const auto& [name, p] : named) {
        w.string(name);
        w.matrix(*p);
    }
    w.matrix(history_matrix(ck));

    auto& buf = w.buffer();
    const auto crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size())));
    w.pod<std::uint32_t>(crc);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    const std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < sizeof(kMagic) + sizeof(std::uint32_t) ||
        std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
        throw corrupt(path, "bad magic or truncated header");
    }
    std::uint32_t version = 0;
    std::memcpy(&version, buf.data() + sizeof(kMagic), sizeof(version));
    if (version != kCheckpointFormatVersion) {
        throw CheckpointError(CheckpointError::Kind::VersionMismatch,
                              "checkpoint '" + path + "' has format version " + std::to_string(version) +
                                  ", this build reads version " + std::to_string(kCheckpointFormatVersion));
    }
    if (buf.size() < sizeof(kMagic) + 2 * sizeof(std::uint32_t)) throw corrupt(path, "truncated");
    const std::size_t body = buf.size() - sizeof(std::uint32_t);
    std::uint32_t stored_crc = 0;
    std::memcpy(&stored_crc, buf.data() + body, sizeof(stored_crc));
    const auto crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(body)));
    if (crc != stored_crc) throw corrupt(path, "checksum mismatch (truncated or damaged file)");

    Reader r(buf, body, path);
    char magic[sizeof(kMagic)];
    for (auto& c : magic) c = r.pod<char>();
    (void)r.pod<std::uint32_t>();

    Checkpoint ck;
    ModelKind kind{};
    try {
        kind = model_kind_from_string(r.string());
        ck.config = ExperimentConfig::parse(r.string());
    } catch (const CheckpointError&) {
        throw;
    } catch (const Error& e) {
        throw corrupt(path, e.what());
    }
    Matrix mn = r.matrix();
    Matrix mx = r.matrix();
    if (mn.cols() != 1 || mx.cols() != 1 || mn.rows() != mx.rows() || mn.rows() < 1) {
        throw CheckpointError(CheckpointError::Kind::ShapeMismatch,
                              "checkpoint '" + path + "': normalization statistics have inconsistent shapes");
    }
    ck.stats = {mn.col(0), mx.col(0)};
    const auto n = ck.stats.series_count();

    // Build the expected layout from the config, then fill it.
    Rng scratch(0);
    if (kind == ModelKind::Gan) {
        ck.model = gan_init(n, ck.config, scratch);
    } else {
        try {
            ck.model = vae_init(n, ck.config, scratch);
        } catch (const InvalidArgument& e) {
            throw CheckpointError(CheckpointError::Kind::ShapeMismatch, "checkpoint '" + path + "': " + e.what());
        }
    }
    auto* gan = std::get_if<GanModel>(&ck.model);
    auto* vae = std::get_if<VaeModel>(&ck.model);
    auto named = collect<NamedMut>(gan, vae);

    const auto count = r.pod<std::uint64_t>();
    if (count != named.size()) {
        throw CheckpointError(CheckpointError::Kind::ShapeMismatch,
                              "checkpoint '" + path + "' holds " + std::to_string(count) + " tensors, config implies " +
                                  std::to_string(named.size()));
    }
    for (auto& [expected_name, target] : named) {
        const auto name = r.string();
        Matrix m = r.matrix();
        if (name != expected_name || m.rows() != target->rows() || m.cols() != target->cols()) {
            throw CheckpointError(CheckpointError::Kind::ShapeMismatch,
                                  "checkpoint '" + path + "': tensor '" + name + "' " + std::to_string(m.rows()) + "x" +
                                      std::to_string(m.cols()) + " does not match expected '" + expected_name + "' " +
                                      std::to_string(target->rows()) + "x" + std::to_string(target->cols()));
        }
        *target = std::move(m);
    }

    const Matrix history = r.matrix();
    if (gan) {
        if (history.rows() > 0 && history.cols() != 2) throw corrupt(path, "bad history shape");
        for (Eigen::Index e = 0; e < history.rows(); ++e) gan->history.push_back({history(e, 0), history(e, 1)});
    } else {
        if (history.rows() > 0 && history.cols() != 3) throw corrupt(path, "bad history shape");
        for (Eigen::Index e = 0; e < history.rows(); ++e) {
            vae->history.push_back({history(e, 0), history(e, 1), history(e, 2)});
        }
    }
    if (!r.done()) throw corrupt(path, "trailing bytes");
    return ck;
}

}  // namespace netgan
