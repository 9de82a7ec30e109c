#include "ucc/io.hpp"

#include "ucc/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace ucc {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

void append_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_i32(std::string& out, std::int32_t v) {
    append_u32(out, static_cast<std::uint32_t>(v));
}

void append_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
public:
    Reader(const std::string& bytes, std::string path)
        : bytes_(bytes), path_(std::move(path)) {}

    std::size_t offset() const { return pos_; }

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes_[pos_++]);
    }

    std::uint32_t u32le() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::int32_t i32le() { return static_cast<std::int32_t>(u32le()); }

    std::uint32_t u32be() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v = (v << 8) | static_cast<std::uint8_t>(bytes_[pos_ + i]);
        pos_ += 4;
        return v;
    }

    double f64le() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i)
            bits |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes_[pos_ + i]))
                    << (8 * i);
        pos_ += 8;
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }

    void raw(void* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, bytes_.data() + pos_, n);
        pos_ += n;
    }

    void expect_done() const {
        if (pos_ != bytes_.size())
            throw FormatError(path_ + ": trailing bytes at offset " + std::to_string(pos_));
    }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size())
            throw FormatError(path_ + ": truncated at byte offset " + std::to_string(pos_));
    }

    const std::string& bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

}  // namespace

void atomic_write_file(const std::string& path, const std::string& bytes) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot open " + tmp + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw FormatError("write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw FormatError("rename failed for " + path + ": " + ec.message());
}

InstancePool load_pool(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);

    std::size_t m = 0, d = 0;
    int k = 0;
    if (!(in >> m >> d >> k)) throw FormatError(path + ": bad header, expected 'm d K'");
    if (d == 0) throw FormatError(path + ": zero dimension");

    InstancePool pool;
    pool.instances = Matrix(m, d);
    pool.labels.resize(m);
    pool.num_classes = k;
    for (std::size_t i = 0; i < m; ++i) {
        auto row = pool.instances.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            if (!(in >> row[j]))
                throw FormatError(path + ": bad value at row " + std::to_string(i) + ", col " +
                                  std::to_string(j));
        }
        if (!(in >> pool.labels[i]))
            throw FormatError(path + ": bad label at row " + std::to_string(i));
    }
    pool.validate();
    return pool;
}

void save_pool(const InstancePool& pool, const std::string& path) {
    pool.validate();
    std::string out;
    out.reserve(pool.size() * (pool.dim() + 1) * 20);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%zu %zu %d\n", pool.size(), pool.dim(), pool.num_classes);
    out += buf;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        auto row = pool.instances.row(i);
        for (std::size_t j = 0; j < pool.dim(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g ", row[j]);
            out += buf;
        }
        std::snprintf(buf, sizeof buf, "%d\n", pool.labels[i]);
        out += buf;
    }
    atomic_write_file(path, out);
}

InstancePool load_idx(const std::string& images_path, const std::string& labels_path) {
    const std::string ibytes = read_file(images_path);
    Reader ir(ibytes, images_path);
    if (std::uint32_t magic = ir.u32be(); magic != 0x00000803u)
        throw FormatError(images_path + ": bad image magic at byte offset 0");
    const std::uint32_t count = ir.u32be();
    const std::uint32_t rows = ir.u32be();
    const std::uint32_t cols = ir.u32be();

    const std::string lbytes = read_file(labels_path);
    Reader lr(lbytes, labels_path);
    if (std::uint32_t magic = lr.u32be(); magic != 0x00000801u)
        throw FormatError(labels_path + ": bad label magic at byte offset 0");
    const std::uint32_t lcount = lr.u32be();
    if (lcount != count)
        throw FormatError(labels_path + ": label count " + std::to_string(lcount) +
                          " does not match image count " + std::to_string(count));

    InstancePool pool;
    pool.instances = Matrix(count, static_cast<std::size_t>(rows) * cols);
    pool.labels.resize(count);

    std::vector<std::uint8_t> pix(static_cast<std::size_t>(rows) * cols);
    int max_label = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        ir.raw(pix.data(), pix.size());
        auto dst = pool.instances.row(i);
        for (std::size_t p = 0; p < pix.size(); ++p)
            dst[p] = static_cast<double>(pix[p]) / 255.0;
        int l = static_cast<int>(lr.u8()) + 1;
        pool.labels[i] = l;
        max_label = std::max(max_label, l);
    }
    ir.expect_done();
    lr.expect_done();
    pool.num_classes = max_label;
    pool.validate();
    return pool;
}

InstancePool filter_pool_classes(const InstancePool& pool, const std::vector<int>& keep) {
    if (keep.empty()) throw ContractError("filter_pool_classes needs at least one class");
    std::map<int, int> remap;
    for (int l : keep) {
        if (l < 1 || l > pool.num_classes)
            throw ContractError("filter class " + std::to_string(l) + " outside the pool range");
        if (!remap.emplace(l, static_cast<int>(remap.size()) + 1).second)
            throw ContractError("duplicate class in filter list");
    }

    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < pool.size(); ++i)
        if (remap.count(pool.labels[i])) rows.push_back(i);
    if (rows.empty()) throw ContractError("no instances left after class filtering");

    InstancePool out;
    out.instances = Matrix(rows.size(), pool.dim());
    out.labels.resize(rows.size());
    out.num_classes = static_cast<int>(keep.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto src = pool.instances.row(rows[i]);
        std::copy(src.begin(), src.end(), out.instances.row(i).begin());
        out.labels[i] = remap[pool.labels[rows[i]]];
    }
    out.validate();
    return out;
}

void save_image(const LabeledImage& img, const std::string& pixels_path,
                const std::string& mask_path) {
    img.validate();
    char hdr[64];
    std::snprintf(hdr, sizeof hdr, "UCCI %zu %zu %zu\n", img.height, img.width, img.channels);
    std::string out = hdr;
    for (double v : img.pixels) append_f64(out, v);
    atomic_write_file(pixels_path, out);

    std::snprintf(hdr, sizeof hdr, "UCCK %zu %zu\n", img.height, img.width);
    out = hdr;
    for (std::uint8_t v : img.mask) out.push_back(static_cast<char>(v));
    atomic_write_file(mask_path, out);
}

LabeledImage load_image(const std::string& pixels_path, const std::string& mask_path) {
    LabeledImage img;
    {
        const std::string bytes = read_file(pixels_path);
        std::size_t nl = bytes.find('\n');
        if (nl == std::string::npos) throw FormatError(pixels_path + ": missing header line");
        std::istringstream hdr(bytes.substr(0, nl));
        std::string magic;
        if (!(hdr >> magic >> img.height >> img.width >> img.channels) || magic != "UCCI")
            throw FormatError(pixels_path + ": bad header, expected 'UCCI H W C'");
        const std::string body = bytes.substr(nl + 1);
        Reader r(body, pixels_path);
        img.pixels.resize(img.height * img.width * img.channels);
        for (double& v : img.pixels) v = r.f64le();
        r.expect_done();
    }
    {
        const std::string bytes = read_file(mask_path);
        std::size_t nl = bytes.find('\n');
        if (nl == std::string::npos) throw FormatError(mask_path + ": missing header line");
        std::istringstream hdr(bytes.substr(0, nl));
        std::string magic;
        std::size_t h = 0, w = 0;
        if (!(hdr >> magic >> h >> w) || magic != "UCCK")
            throw FormatError(mask_path + ": bad header, expected 'UCCK H W'");
        if (h != img.height || w != img.width)
            throw FormatError(mask_path + ": mask dims do not match the image");
        const std::string body = bytes.substr(nl + 1);
        if (body.size() != h * w)
            throw FormatError(mask_path + ": truncated at byte offset " +
                              std::to_string(nl + 1 + body.size()));
        img.mask.resize(h * w);
        for (std::size_t i = 0; i < img.mask.size(); ++i)
            img.mask[i] = static_cast<std::uint8_t>(body[i]);
    }
    img.validate();
    return img;
}

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

void append_net(std::string& out, const MlpParams& net) {
    append_u32(out, static_cast<std::uint32_t>(net.layers.size()));
    for (const MlpLayer& l : net.layers) {
        append_u32(out, static_cast<std::uint32_t>(l.weight.rows()));
        append_u32(out, static_cast<std::uint32_t>(l.weight.cols()));
        out.push_back(static_cast<char>(l.act));
        for (double v : l.weight.data()) append_f64(out, v);
        for (double v : l.bias) append_f64(out, v);
    }
}

MlpParams read_net(Reader& r, const std::string& path) {
    MlpParams net;
    const std::uint32_t n_layers = r.u32le();
    if (n_layers == 0 || n_layers > 64)
        throw FormatError(path + ": implausible layer count at byte offset " +
                          std::to_string(r.offset() - 4));
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        const std::uint32_t in = r.u32le();
        const std::uint32_t outd = r.u32le();
        const std::uint8_t act = r.u8();
        if (act > static_cast<std::uint8_t>(Activation::Softmax))
            throw FormatError(path + ": unknown activation tag at byte offset " +
                              std::to_string(r.offset() - 1));
        MlpLayer layer;
        layer.weight = Matrix(in, outd);
        layer.bias.resize(outd);
        layer.act = static_cast<Activation>(act);
        for (double& v : layer.weight.data()) v = r.f64le();
        for (double& v : layer.bias) v = r.f64le();
        net.layers.push_back(std::move(layer));
    }
    net.validate();
    return net;
}

}  // namespace

void save_checkpoint(const UccModel& model, const std::string& path) {
    model.validate();
    std::string out = "UCCM";
    append_u32(out, kCheckpointVersion);
    append_net(out, model.feature_net);
    append_net(out, model.drn_net);
    append_net(out, model.decoder_net);
    append_u32(out, static_cast<std::uint32_t>(model.kde.bins));
    append_f64(out, model.kde.bandwidth);
    append_f64(out, model.kde.range_lo);
    append_f64(out, model.kde.range_hi);
    append_f64(out, model.alpha);
    append_i32(out, model.ucc_lo);
    append_i32(out, model.ucc_hi);
    out.push_back(static_cast<char>(model.pooling));
    atomic_write_file(path, out);
}

UccModel load_checkpoint(const std::string& path) {
    const std::string bytes = read_file(path);
    Reader r(bytes, path);
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, "UCCM", 4) != 0)
        throw FormatError(path + ": bad checkpoint magic at byte offset 0");
    if (std::uint32_t v = r.u32le(); v != kCheckpointVersion)
        throw FormatError(path + ": unsupported checkpoint version " + std::to_string(v));

    UccModel model;
    model.feature_net = read_net(r, path);
    model.drn_net = read_net(r, path);
    model.decoder_net = read_net(r, path);
    model.kde.bins = r.u32le();
    model.kde.bandwidth = r.f64le();
    model.kde.range_lo = r.f64le();
    model.kde.range_hi = r.f64le();
    model.alpha = r.f64le();
    model.ucc_lo = r.i32le();
    model.ucc_hi = r.i32le();
    const std::uint8_t pooling = r.u8();
    if (pooling > static_cast<std::uint8_t>(Pooling::Mean))
        throw FormatError(path + ": unknown pooling tag");
    model.pooling = static_cast<Pooling>(pooling);
    r.expect_done();
    model.validate();
    return model;
}

}  // namespace ucc
