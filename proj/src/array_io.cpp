#include "spdnet/array_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>

static_assert(std::endian::native == std::endian::little, "array I/O assumes a little-endian host");

namespace spdnet::io {
namespace fs = std::filesystem;

namespace {

std::string shape_tuple(std::span<const std::int64_t> shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        s += std::to_string(shape[i]);
        if (shape.size() == 1 || i + 1 < shape.size()) s += ",";
        if (i + 1 < shape.size()) s += " ";
    }
    return s + ")";
}

void write_npy_raw(const fs::path& path, std::span<const std::int64_t> shape, const char* descr,
                   const void* bytes, std::size_t nbytes) {
    std::string header = std::string("{'descr': '") + descr + "', 'fortran_order': False, 'shape': " +
                         shape_tuple(shape) + ", }";
    // magic(6) + version(2) + len(2) + header + '\n' padded to a multiple of 64
    std::size_t total = 10 + header.size() + 1;
    header.append((64 - total % 64) % 64, ' ');
    header.push_back('\n');

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write("\x93NUMPY\x01\x00", 8);
    const auto len = static_cast<std::uint16_t>(header.size());
    out.write(reinterpret_cast<const char*>(&len), 2);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(static_cast<const char*>(bytes), static_cast<std::streamsize>(nbytes));
    if (!out) throw IoError("write failed: " + path.string());
}

std::size_t element_count(std::span<const std::int64_t> shape) {
    return static_cast<std::size_t>(
        std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>()));
}

template <class T>
void widen(const std::vector<char>& raw, std::size_t offset, std::size_t n, std::vector<double>& out) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        T v;
        std::memcpy(&v, raw.data() + offset + i * sizeof(T), sizeof(T));
        out[i] = static_cast<double>(v);
    }
}

bool widen_by_code(const std::string& code, const std::vector<char>& raw, std::size_t offset,
                   std::size_t n, std::vector<double>& out) {
    if (code == "f4") widen<float>(raw, offset, n, out);
    else if (code == "f8") widen<double>(raw, offset, n, out);
    else if (code == "u1") widen<std::uint8_t>(raw, offset, n, out);
    else if (code == "i1") widen<std::int8_t>(raw, offset, n, out);
    else if (code == "i2") widen<std::int16_t>(raw, offset, n, out);
    else if (code == "u2") widen<std::uint16_t>(raw, offset, n, out);
    else if (code == "i4") widen<std::int32_t>(raw, offset, n, out);
    else if (code == "u4") widen<std::uint32_t>(raw, offset, n, out);
    else if (code == "i8") widen<std::int64_t>(raw, offset, n, out);
    else return false;
    return true;
}

std::vector<char> read_all_gz(const fs::path& path) {
    gzFile f = gzopen(path.string().c_str(), "rb");
    if (!f) throw IoError("cannot open: " + path.string());
    std::vector<char> buf;
    char chunk[1 << 16];
    int got = 0;
    while ((got = gzread(f, chunk, sizeof chunk)) > 0) buf.insert(buf.end(), chunk, chunk + got);
    const bool failed = got < 0;
    gzclose(f);
    if (failed) throw CorruptFileError("gzip stream error: " + path.string());
    return buf;
}

template <class T>
T read_field(const std::vector<char>& raw, std::size_t offset, bool swap) {
    T v;
    std::memcpy(&v, raw.data() + offset, sizeof(T));
    if (swap) {
        auto* p = reinterpret_cast<unsigned char*>(&v);
        std::reverse(p, p + sizeof(T));
    }
    return v;
}

}  // namespace

void write_npy(const fs::path& path, std::span<const std::int64_t> shape, std::span<const float> values) {
    if (element_count(shape) != values.size()) throw InvalidArgument("write_npy: shape/value count mismatch");
    write_npy_raw(path, shape, "<f4", values.data(), values.size_bytes());
}

void write_npy(const fs::path& path, std::span<const std::int64_t> shape,
               std::span<const std::uint8_t> values) {
    if (element_count(shape) != values.size()) throw InvalidArgument("write_npy: shape/value count mismatch");
    write_npy_raw(path, shape, "|u1", values.data(), values.size_bytes());
}

void write_npy(const fs::path& path, const Grid<float>& grid) {
    const std::int64_t shape[2] = {grid.rows, grid.cols};
    write_npy(path, shape, std::span<const float>(grid.data));
}

void write_npy(const fs::path& path, const Grid<std::uint8_t>& grid) {
    const std::int64_t shape[2] = {grid.rows, grid.cols};
    write_npy(path, shape, std::span<const std::uint8_t>(grid.data));
}

NdArray read_npy(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (raw.size() < 10 || std::memcmp(raw.data(), "\x93NUMPY", 6) != 0)
        throw CorruptFileError("not an npy file: " + path.string());
    const int major = static_cast<unsigned char>(raw[6]);
    std::size_t header_len = 0;
    std::size_t header_start = 0;
    if (major == 1) {
        header_len = read_field<std::uint16_t>(raw, 8, false);
        header_start = 10;
    } else if (major == 2 || major == 3) {
        header_len = read_field<std::uint32_t>(raw, 8, false);
        header_start = 12;
    } else {
        throw CorruptFileError("unsupported npy version in " + path.string());
    }
    if (raw.size() < header_start + header_len) throw CorruptFileError("truncated npy header: " + path.string());
    const std::string header(raw.data() + header_start, header_len);

    NdArray arr;
    std::smatch m;
    if (!std::regex_search(header, m, std::regex(R"('descr'\s*:\s*'([^']+)')")))
        throw CorruptFileError("npy header lacks descr: " + path.string());
    arr.descr = m[1];
    if (std::regex_search(header, m, std::regex(R"('fortran_order'\s*:\s*True)")))
        throw CorruptFileError("fortran-ordered npy not supported: " + path.string());
    if (!std::regex_search(header, m, std::regex(R"('shape'\s*:\s*\(([^)]*)\))")))
        throw CorruptFileError("npy header lacks shape: " + path.string());
    std::stringstream dims(m[1].str());
    std::string tok;
    while (std::getline(dims, tok, ',')) {
        tok.erase(std::remove_if(tok.begin(), tok.end(), ::isspace), tok.end());
        if (!tok.empty()) arr.shape.push_back(std::stoll(tok));
    }
    if (arr.descr.size() < 3 || arr.descr[0] == '>')
        throw CorruptFileError("unsupported npy dtype " + arr.descr + ": " + path.string());
    const std::size_t n = element_count(arr.shape);
    const std::size_t width = static_cast<std::size_t>(arr.descr.back() - '0');
    const std::size_t offset = header_start + header_len;
    if (raw.size() < offset + n * width) throw CorruptFileError("truncated npy data: " + path.string());
    if (!widen_by_code(arr.descr.substr(1), raw, offset, n, arr.values))
        throw CorruptFileError("unsupported npy dtype " + arr.descr + ": " + path.string());
    return arr;
}

Grid<float> read_npy_image(const fs::path& path) {
    auto arr = read_npy(path);
    if (arr.shape.size() != 2) throw ShapeMismatch("expected a 2-D array in " + path.string());
    Grid<float> g(arr.shape[0], arr.shape[1]);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!std::isfinite(arr.values[i])) throw InvalidArgument("non-finite pixel in " + path.string());
        g.data[i] = static_cast<float>(arr.values[i]);
    }
    return g;
}

Grid<std::uint8_t> read_npy_labels(const fs::path& path) {
    auto arr = read_npy(path);
    if (arr.shape.size() != 2) throw ShapeMismatch("expected a 2-D array in " + path.string());
    Grid<std::uint8_t> g(arr.shape[0], arr.shape[1]);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double v = arr.values[i];
        if (v < 0 || v > 255 || v != std::floor(v)) throw SchemaError("invalid label value in " + path.string());
        g.data[i] = static_cast<std::uint8_t>(v);
    }
    return g;
}

Volume read_nifti(const fs::path& path) {
    const std::vector<char> raw = read_all_gz(path);  // gzread also passes through uncompressed files
    if (raw.size() < 352) throw CorruptFileError("file too small for NIfTI-1: " + path.string());
    bool swap = false;
    auto hdr_size = read_field<std::int32_t>(raw, 0, false);
    if (hdr_size != 348) {
        swap = true;
        hdr_size = read_field<std::int32_t>(raw, 0, true);
        if (hdr_size != 348) throw CorruptFileError("not a NIfTI-1 header: " + path.string());
    }
    if (std::memcmp(raw.data() + 344, "n+1", 3) != 0 && std::memcmp(raw.data() + 344, "ni1", 3) != 0)
        throw CorruptFileError("bad NIfTI magic: " + path.string());

    Volume vol;
    const auto ndim = read_field<std::int16_t>(raw, 40, swap);
    if (ndim < 2 || ndim > 7) throw CorruptFileError("bad NIfTI dimension count: " + path.string());
    for (int d = 0; d < 3; ++d) {
        const auto v = d < ndim ? read_field<std::int16_t>(raw, 42 + 2 * d, swap) : std::int16_t{1};
        vol.dims[d] = std::max<std::int64_t>(1, v);
        const float pix = read_field<float>(raw, 80 + 4 * d, swap);
        vol.spacing[d] = pix > 0 ? pix : 1.0;
    }
    std::int64_t extra = 1;
    for (int d = 3; d < ndim; ++d) extra *= std::max<std::int16_t>(1, read_field<std::int16_t>(raw, 42 + 2 * d, swap));
    if (extra != 1) throw ShapeMismatch("only 2-D/3-D NIfTI volumes are supported: " + path.string());

    const auto datatype = read_field<std::int16_t>(raw, 70, swap);
    const auto vox_offset = static_cast<std::size_t>(read_field<float>(raw, 108, swap));
    float slope = read_field<float>(raw, 112, swap);
    const float inter = read_field<float>(raw, 116, swap);
    if (slope == 0.0f || !std::isfinite(slope)) slope = 1.0f;

    std::string code;
    std::size_t width = 0;
    switch (datatype) {
        case 2: code = "u1"; width = 1; break;
        case 256: code = "i1"; width = 1; break;
        case 4: code = "i2"; width = 2; break;
        case 512: code = "u2"; width = 2; break;
        case 8: code = "i4"; width = 4; break;
        case 768: code = "u4"; width = 4; break;
        case 16: code = "f4"; width = 4; break;
        case 64: code = "f8"; width = 8; break;
        default: throw CorruptFileError("unsupported NIfTI datatype " + std::to_string(datatype));
    }
    const auto n = static_cast<std::size_t>(vol.dims[0] * vol.dims[1] * vol.dims[2]);
    const std::size_t offset = std::max<std::size_t>(vox_offset, 352);
    if (raw.size() < offset + n * width) throw CorruptFileError("truncated NIfTI data: " + path.string());
    if (swap) {
        std::vector<char> swapped(raw.begin() + static_cast<std::ptrdiff_t>(offset),
                                  raw.begin() + static_cast<std::ptrdiff_t>(offset + n * width));
        for (std::size_t i = 0; i < n; ++i) std::reverse(swapped.begin() + i * width, swapped.begin() + (i + 1) * width);
        widen_by_code(code, swapped, 0, n, vol.voxels);
    } else {
        widen_by_code(code, raw, offset, n, vol.voxels);
    }
    if (slope != 1.0f || inter != 0.0f)
        for (auto& v : vol.voxels) v = v * slope + inter;
    return vol;
}

void write_nifti(const fs::path& path, const Volume& vol, NiftiType type) {
    std::vector<char> hdr(352, 0);
    auto put = [&](std::size_t off, auto v) { std::memcpy(hdr.data() + off, &v, sizeof v); };
    put(0, std::int32_t{348});
    put(40, std::int16_t{3});
    for (int d = 0; d < 3; ++d) put(42 + 2 * d, static_cast<std::int16_t>(vol.dims[d]));
    for (int d = 3; d < 7; ++d) put(42 + 2 * d, std::int16_t{1});
    std::size_t width = 0;
    switch (type) {
        case NiftiType::UInt8: width = 1; break;
        case NiftiType::Int16: case NiftiType::UInt16: width = 2; break;
        case NiftiType::Int32: case NiftiType::Float32: width = 4; break;
        case NiftiType::Float64: width = 8; break;
    }
    put(70, static_cast<std::int16_t>(type));
    put(72, static_cast<std::int16_t>(width * 8));
    put(76, 1.0f);
    for (int d = 0; d < 3; ++d) put(80 + 4 * d, static_cast<float>(vol.spacing[d]));
    put(108, 352.0f);
    put(112, 1.0f);
    std::memcpy(hdr.data() + 344, "n+1", 4);

    std::vector<char> body(vol.voxels.size() * width);
    for (std::size_t i = 0; i < vol.voxels.size(); ++i) {
        const double v = vol.voxels[i];
        char* dst = body.data() + i * width;
        switch (type) {
            case NiftiType::UInt8: { auto x = static_cast<std::uint8_t>(v); std::memcpy(dst, &x, 1); break; }
            case NiftiType::Int16: { auto x = static_cast<std::int16_t>(v); std::memcpy(dst, &x, 2); break; }
            case NiftiType::UInt16: { auto x = static_cast<std::uint16_t>(v); std::memcpy(dst, &x, 2); break; }
            case NiftiType::Int32: { auto x = static_cast<std::int32_t>(v); std::memcpy(dst, &x, 4); break; }
            case NiftiType::Float32: { auto x = static_cast<float>(v); std::memcpy(dst, &x, 4); break; }
            case NiftiType::Float64: std::memcpy(dst, &v, 8); break;
        }
    }
    const bool gz = path.extension() == ".gz";
    if (gz) {
        gzFile f = gzopen(path.string().c_str(), "wb");
        if (!f) throw IoError("cannot open for writing: " + path.string());
        const bool ok = gzwrite(f, hdr.data(), static_cast<unsigned>(hdr.size())) > 0 &&
                        (body.empty() || gzwrite(f, body.data(), static_cast<unsigned>(body.size())) > 0);
        gzclose(f);
        if (!ok) throw IoError("write failed: " + path.string());
    } else {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open for writing: " + path.string());
        out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
        out.write(body.data(), static_cast<std::streamsize>(body.size()));
        if (!out) throw IoError("write failed: " + path.string());
    }
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace spdnet::io
