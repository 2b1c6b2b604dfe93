#include "habitat/raster.hpp"

#include "habitat/errors.hpp"
#include "habitat/util.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace habitat {

double value_at(const RasterGrid& grid, double lat, double lon) {
    const int col = static_cast<int>(std::floor((lon - grid.x_origin) / grid.cell_size));
    const int row = static_cast<int>(std::floor((grid.y_origin - lat) / grid.cell_size));
    if (col < 0 || col >= grid.ncols || row < 0 || row >= grid.nrows)
        throw OutOfExtent("point (" + std::to_string(lat) + ", " + std::to_string(lon) +
                          ") outside raster extent");
    return grid.at(row, col);
}

// ---------------------------------------------------------------- ASCII grid

RasterGrid load_ascii_grid(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open raster: " + path.string());

    RasterGrid g;
    double xll = 0, yll = 0;
    bool have_nodata = false;
    std::string pending;  // first data token when the nodata line is absent
    // header: ncols/nrows/xllcorner/yllcorner/cellsize[/NODATA_value]
    for (int i = 0; i < 6; ++i) {
        std::string key;
        if (!(in >> key)) throw CorruptFile("truncated ASCII grid header: " + path.string());
        std::transform(key.begin(), key.end(), key.begin(), ::tolower);
        if (key == "ncols") in >> g.ncols;
        else if (key == "nrows") in >> g.nrows;
        else if (key == "xllcorner") in >> xll;
        else if (key == "yllcorner") in >> yll;
        else if (key == "cellsize") in >> g.cell_size;
        else if (key == "nodata_value") { in >> g.nodata; have_nodata = true; }
        else {
            pending = key;  // optional nodata line missing: this token is a value
            break;
        }
        if (!in) throw CorruptFile("bad ASCII grid header: " + path.string());
    }
    if (g.ncols <= 0 || g.nrows <= 0 || g.cell_size <= 0)
        throw CorruptFile("ASCII grid header has non-positive dimensions: " + path.string());
    if (!have_nodata) g.nodata = -9999.0;

    g.x_origin = xll;
    g.y_origin = yll + g.nrows * g.cell_size;
    g.values.resize(static_cast<std::size_t>(g.ncols) * g.nrows);
    std::size_t start = 0;
    if (!pending.empty()) {
        try {
            g.values[0] = std::stod(pending);
        } catch (...) {
            throw CorruptFile("unexpected ASCII grid header token '" + pending + "': " + path.string());
        }
        start = 1;
    }
    for (std::size_t i = start; i < g.values.size(); ++i) {
        if (!(in >> g.values[i])) throw CorruptFile("truncated ASCII grid values: " + path.string());
    }
    return g;
}

void save_ascii_grid(const RasterGrid& grid, const std::filesystem::path& path) {
    std::ostringstream out;
    out.precision(17);
    out << "ncols " << grid.ncols << "\n"
        << "nrows " << grid.nrows << "\n"
        << "xllcorner " << grid.x_origin << "\n"
        << "yllcorner " << (grid.y_origin - grid.nrows * grid.cell_size) << "\n"
        << "cellsize " << grid.cell_size << "\n"
        << "NODATA_value " << grid.nodata << "\n";
    for (int r = 0; r < grid.nrows; ++r) {
        for (int c = 0; c < grid.ncols; ++c) {
            if (c) out << ' ';
            out << grid.at(r, c);
        }
        out << "\n";
    }
    atomic_write_file(path, out.str());
}

// ------------------------------------------------------------------ GeoTIFF
//
// Minimal TIFF 6.0 machinery. Tags used (decimal):
//   256 width   257 height  258 bits    259 compression  262 photometric
//   273 strip offsets  277 samples/pixel  278 rows/strip  279 strip bytecounts
//   317 predictor  322/323 tile w/h  324/325 tile offsets/bytecounts
//   339 sample format  33550 ModelPixelScale  33922 ModelTiepoint
//   42113 GDAL_NODATA (ascii)

namespace {

enum : std::uint16_t {
    kTagWidth = 256, kTagHeight = 257, kTagBits = 258, kTagCompression = 259,
    kTagPhotometric = 262, kTagStripOffsets = 273, kTagSamplesPerPixel = 277,
    kTagRowsPerStrip = 278, kTagStripByteCounts = 279, kTagPredictor = 317,
    kTagTileWidth = 322, kTagTileHeight = 323, kTagTileOffsets = 324,
    kTagTileByteCounts = 325, kTagSampleFormat = 339,
    kTagModelPixelScale = 33550, kTagModelTiepoint = 33922, kTagGdalNodata = 42113
};

enum : std::uint16_t { kTypeByte = 1, kTypeAscii = 2, kTypeShort = 3, kTypeLong = 4, kTypeDouble = 12 };

std::size_t type_size(std::uint16_t t) {
    switch (t) {
        case kTypeByte: case kTypeAscii: return 1;
        case kTypeShort: return 2;
        case kTypeLong: return 4;
        case kTypeDouble: return 8;
        default: return 0;
    }
}

struct TiffReader {
    std::string data;
    bool swap = false;
    std::string name;

    std::uint16_t u16(std::size_t off) const {
        if (off + 2 > data.size()) throw CorruptFile("truncated TIFF: " + name);
        std::uint16_t v;
        std::memcpy(&v, data.data() + off, 2);
        if (swap) v = static_cast<std::uint16_t>((v >> 8) | (v << 8));
        return v;
    }
    std::uint32_t u32(std::size_t off) const {
        if (off + 4 > data.size()) throw CorruptFile("truncated TIFF: " + name);
        std::uint32_t v;
        std::memcpy(&v, data.data() + off, 4);
        if (swap) v = __builtin_bswap32(v);
        return v;
    }
    double f64(std::size_t off) const {
        if (off + 8 > data.size()) throw CorruptFile("truncated TIFF: " + name);
        std::uint64_t v;
        std::memcpy(&v, data.data() + off, 8);
        if (swap) v = __builtin_bswap64(v);
        double d;
        std::memcpy(&d, &v, 8);
        return d;
    }
    float f32raw(const unsigned char* p) const {
        std::uint32_t v;
        std::memcpy(&v, p, 4);
        if (swap) v = __builtin_bswap32(v);
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    }
    std::int16_t i16raw(const unsigned char* p) const {
        std::uint16_t v;
        std::memcpy(&v, p, 2);
        if (swap) v = static_cast<std::uint16_t>((v >> 8) | (v << 8));
        return static_cast<std::int16_t>(v);
    }
};

struct IfdEntry {
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::size_t value_off = 0;  // offset of the inline value field or the pointed-to data
};

std::vector<std::uint32_t> read_uint_array(const TiffReader& r, const IfdEntry& e) {
    std::vector<std::uint32_t> out(e.count);
    for (std::uint32_t i = 0; i < e.count; ++i) {
        if (e.type == kTypeShort) out[i] = r.u16(e.value_off + 2 * i);
        else if (e.type == kTypeLong) out[i] = r.u32(e.value_off + 4 * i);
        else throw UnsupportedFormat("unexpected TIFF tag type for integer array");
    }
    return out;
}

std::vector<unsigned char> inflate_block(const unsigned char* src, std::size_t len,
                                         std::size_t expected) {
    std::vector<unsigned char> out(expected);
    z_stream zs{};
    if (inflateInit(&zs) != Z_OK) throw CorruptFile("zlib init failed");
    zs.next_in = const_cast<unsigned char*>(src);
    zs.avail_in = static_cast<uInt>(len);
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    if (rc != Z_STREAM_END) throw CorruptFile("DEFLATE block did not decompress cleanly");
    out.resize(out.size() - zs.avail_out);
    return out;
}

std::vector<unsigned char> deflate_block(const unsigned char* src, std::size_t len) {
    uLongf bound = compressBound(static_cast<uLong>(len));
    std::vector<unsigned char> out(bound);
    if (compress2(out.data(), &bound, src, static_cast<uLong>(len), Z_DEFAULT_COMPRESSION) != Z_OK)
        throw IoError("zlib compression failed");
    out.resize(bound);
    return out;
}

}  // namespace

RasterGrid load_geotiff(const std::filesystem::path& path) {
    TiffReader r;
    r.data = read_file(path);
    r.name = path.string();
    if (r.data.size() < 8) throw CorruptFile("file too small for TIFF header: " + r.name);
    if (r.data[0] == 'I' && r.data[1] == 'I') r.swap = false;
    else if (r.data[0] == 'M' && r.data[1] == 'M') r.swap = true;
    else throw CorruptFile("not a TIFF file: " + r.name);
#if __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
    r.swap = !r.swap;
#endif
    if (r.u16(2) != 42) throw CorruptFile("bad TIFF magic: " + r.name);

    const std::uint32_t ifd_off = r.u32(4);
    const std::uint16_t n_entries = r.u16(ifd_off);
    std::map<std::uint16_t, IfdEntry> tags;
    for (std::uint16_t i = 0; i < n_entries; ++i) {
        const std::size_t e = ifd_off + 2 + 12 * std::size_t(i);
        IfdEntry entry;
        const std::uint16_t tag = r.u16(e);
        entry.type = r.u16(e + 2);
        entry.count = r.u32(e + 4);
        const std::size_t bytes = type_size(entry.type) * entry.count;
        entry.value_off = (bytes <= 4) ? e + 8 : r.u32(e + 8);
        tags[tag] = entry;
    }

    auto get_u32 = [&](std::uint16_t tag, std::uint32_t dflt, bool required = false) -> std::uint32_t {
        auto it = tags.find(tag);
        if (it == tags.end()) {
            if (required) throw UnsupportedFormat("TIFF missing required tag " + std::to_string(tag));
            return dflt;
        }
        return read_uint_array(r, it->second).at(0);
    };

    RasterGrid g;
    g.ncols = static_cast<int>(get_u32(kTagWidth, 0, true));
    g.nrows = static_cast<int>(get_u32(kTagHeight, 0, true));
    if (g.ncols <= 0 || g.nrows <= 0) throw CorruptFile("TIFF with empty image: " + r.name);

    const std::uint32_t bits = get_u32(kTagBits, 1);
    const std::uint32_t compression = get_u32(kTagCompression, 1);
    const std::uint32_t spp = get_u32(kTagSamplesPerPixel, 1);
    const std::uint32_t predictor = get_u32(kTagPredictor, 1);
    const std::uint32_t fmt = get_u32(kTagSampleFormat, bits == 32 ? 3 : 2);
    if (spp != 1) throw UnsupportedFormat("multi-band TIFF not supported (SamplesPerPixel=" +
                                          std::to_string(spp) + ")");
    if (predictor != 1) throw UnsupportedFormat("TIFF predictor " + std::to_string(predictor) +
                                                " not supported");
    if (compression != 1 && compression != 8 && compression != 32946)
        throw UnsupportedFormat("TIFF compression " + std::to_string(compression) +
                                " not supported (need none or DEFLATE)");
    const bool is_float = (bits == 32 && fmt == 3);
    const bool is_int16 = (bits == 16 && (fmt == 1 || fmt == 2));
    if (!is_float && !is_int16)
        throw UnsupportedFormat("TIFF sample layout not supported (bits=" + std::to_string(bits) +
                                ", format=" + std::to_string(fmt) + ")");
    const std::size_t bpp = bits / 8;
    const bool compressed = compression != 1;

    // georeferencing
    auto ps = tags.find(kTagModelPixelScale);
    auto tp = tags.find(kTagModelTiepoint);
    if (ps == tags.end() || tp == tags.end())
        throw UnsupportedFormat("TIFF missing ModelPixelScale/ModelTiepoint georeferencing");
    if (ps->second.count < 2 || tp->second.count < 6)
        throw CorruptFile("malformed georeferencing tags: " + r.name);
    const double sx = r.f64(ps->second.value_off);
    const double sy = r.f64(ps->second.value_off + 8);
    if (sx <= 0 || sy <= 0 || std::abs(sx - sy) > 1e-9 * std::max(sx, sy))
        throw UnsupportedFormat("non-square pixels not supported");
    const double ti = r.f64(tp->second.value_off);
    const double tj = r.f64(tp->second.value_off + 8);
    const double tx = r.f64(tp->second.value_off + 24);
    const double ty = r.f64(tp->second.value_off + 32);
    g.cell_size = sx;
    g.x_origin = tx - ti * sx;
    g.y_origin = ty + tj * sy;

    auto nd = tags.find(kTagGdalNodata);
    if (nd != tags.end()) {
        std::string s(r.data.data() + nd->second.value_off,
                      std::min<std::size_t>(nd->second.count, 64));
        s = s.c_str();  // trim at NUL
        try {
            g.nodata = std::stod(s);
        } catch (...) {
            g.nodata = std::nan("");
        }
    }

    g.values.assign(static_cast<std::size_t>(g.ncols) * g.nrows, g.nodata);

    auto decode_samples = [&](const unsigned char* src, std::size_t nbytes, std::size_t count,
                              auto&& emit) {
        if (nbytes < count * bpp) throw CorruptFile("TIFF block shorter than expected: " + r.name);
        for (std::size_t k = 0; k < count; ++k) {
            const unsigned char* p = src + k * bpp;
            emit(k, is_float ? static_cast<double>(r.f32raw(p)) : static_cast<double>(r.i16raw(p)));
        }
    };

    auto block_bytes = [&](std::uint32_t off, std::uint32_t len, std::size_t raw_size)
        -> std::vector<unsigned char> {
        if (std::size_t(off) + len > r.data.size()) throw CorruptFile("TIFF block out of bounds: " + r.name);
        const auto* src = reinterpret_cast<const unsigned char*>(r.data.data()) + off;
        if (compressed) return inflate_block(src, len, raw_size);
        return std::vector<unsigned char>(src, src + len);
    };

    if (tags.count(kTagTileOffsets)) {
        const auto tw = get_u32(kTagTileWidth, 0, true);
        const auto th = get_u32(kTagTileHeight, 0, true);
        if (tw == 0 || th == 0) throw CorruptFile("zero tile size: " + r.name);
        const auto offsets = read_uint_array(r, tags.at(kTagTileOffsets));
        const auto counts = read_uint_array(r, tags.at(kTagTileByteCounts));
        const std::size_t tiles_x = (g.ncols + tw - 1) / tw;
        const std::size_t tiles_y = (g.nrows + th - 1) / th;
        if (offsets.size() < tiles_x * tiles_y || counts.size() < tiles_x * tiles_y)
            throw CorruptFile("tile table shorter than tile grid: " + r.name);
        for (std::size_t tyi = 0; tyi < tiles_y; ++tyi) {
            for (std::size_t txi = 0; txi < tiles_x; ++txi) {
                const std::size_t t = tyi * tiles_x + txi;
                const auto raw = block_bytes(offsets[t], counts[t], std::size_t(tw) * th * bpp);
                decode_samples(raw.data(), raw.size(), std::size_t(tw) * th, [&](std::size_t k, double v) {
                    const std::size_t rr = tyi * th + k / tw;
                    const std::size_t cc = txi * tw + k % tw;
                    if (rr < static_cast<std::size_t>(g.nrows) && cc < static_cast<std::size_t>(g.ncols))
                        g.values[rr * g.ncols + cc] = v;
                });
            }
        }
    } else if (tags.count(kTagStripOffsets)) {
        const auto offsets = read_uint_array(r, tags.at(kTagStripOffsets));
        const auto counts = read_uint_array(r, tags.at(kTagStripByteCounts));
        const std::uint32_t rps = get_u32(kTagRowsPerStrip, static_cast<std::uint32_t>(g.nrows));
        if (counts.size() != offsets.size()) throw CorruptFile("strip tables disagree: " + r.name);
        std::size_t row = 0;
        for (std::size_t s = 0; s < offsets.size(); ++s) {
            const std::size_t rows_here = std::min<std::size_t>(rps, g.nrows - row);
            const std::size_t want = rows_here * g.ncols;
            const auto raw = block_bytes(offsets[s], counts[s], want * bpp);
            decode_samples(raw.data(), raw.size(), want, [&](std::size_t k, double v) {
                g.values[row * g.ncols + k] = v;
            });
            row += rows_here;
            if (row >= static_cast<std::size_t>(g.nrows)) break;
        }
        if (row < static_cast<std::size_t>(g.nrows))
            throw CorruptFile("strips cover only " + std::to_string(row) + " of " +
                              std::to_string(g.nrows) + " rows: " + r.name);
    } else {
        throw UnsupportedFormat("TIFF has neither strips nor tiles: " + r.name);
    }

    return g;
}

void save_geotiff(const RasterGrid& grid, const std::filesystem::path& path,
                  const GeoTiffWriteOptions& opts) {
    const std::size_t bpp = opts.float32 ? 4 : 2;
    const bool tiled = opts.tile_size > 0;
    if (tiled && opts.tile_size % 16 != 0) throw ConfigError("TIFF tile size must be a multiple of 16");

    auto encode_samples = [&](const std::vector<double>& vals) {
        std::vector<unsigned char> raw(vals.size() * bpp);
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (opts.float32) {
                const float f = static_cast<float>(vals[i]);
                std::memcpy(raw.data() + 4 * i, &f, 4);
            } else {
                const auto v = static_cast<std::int16_t>(std::lrint(vals[i]));
                std::memcpy(raw.data() + 2 * i, &v, 2);
            }
        }
        return raw;
    };

    // assemble data blocks
    std::vector<std::vector<unsigned char>> blocks;
    std::uint32_t tiles_x = 0, tiles_y = 0;
    if (tiled) {
        const int ts = opts.tile_size;
        tiles_x = (grid.ncols + ts - 1) / ts;
        tiles_y = (grid.nrows + ts - 1) / ts;
        for (std::uint32_t ty = 0; ty < tiles_y; ++ty) {
            for (std::uint32_t tx = 0; tx < tiles_x; ++tx) {
                std::vector<double> tile(static_cast<std::size_t>(ts) * ts, grid.nodata);
                for (int dr = 0; dr < ts; ++dr) {
                    const std::size_t rr = std::size_t(ty) * ts + dr;
                    if (rr >= static_cast<std::size_t>(grid.nrows)) break;
                    for (int dc = 0; dc < ts; ++dc) {
                        const std::size_t cc = std::size_t(tx) * ts + dc;
                        if (cc >= static_cast<std::size_t>(grid.ncols)) break;
                        tile[static_cast<std::size_t>(dr) * ts + dc] = grid.values[rr * grid.ncols + cc];
                    }
                }
                blocks.push_back(encode_samples(tile));
            }
        }
    } else {
        const int rps = std::max(1, opts.rows_per_strip);
        for (int row = 0; row < grid.nrows; row += rps) {
            const int rows_here = std::min(rps, grid.nrows - row);
            std::vector<double> strip(grid.values.begin() + std::size_t(row) * grid.ncols,
                                      grid.values.begin() + std::size_t(row + rows_here) * grid.ncols);
            blocks.push_back(encode_samples(strip));
        }
    }
    if (opts.deflate)
        for (auto& b : blocks) b = deflate_block(b.data(), b.size());

    std::string nodata_str;
    if (!std::isnan(grid.nodata)) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", grid.nodata);
        nodata_str = buf;
        nodata_str.push_back('\0');
    }

    struct Entry {
        std::uint16_t tag, type;
        std::uint32_t count;
        std::vector<std::uint32_t> ints;   // for SHORT/LONG
        std::vector<double> dbls;          // for DOUBLE
        std::string ascii;                 // for ASCII
    };
    std::vector<Entry> entries;
    auto add_int = [&](std::uint16_t tag, std::uint16_t type, std::vector<std::uint32_t> v) {
        entries.push_back({tag, type, static_cast<std::uint32_t>(v.size()), std::move(v), {}, {}});
    };
    auto add_dbl = [&](std::uint16_t tag, std::vector<double> v) {
        entries.push_back({tag, kTypeDouble, static_cast<std::uint32_t>(v.size()), {}, std::move(v), {}});
    };

    add_int(kTagWidth, kTypeLong, {static_cast<std::uint32_t>(grid.ncols)});
    add_int(kTagHeight, kTypeLong, {static_cast<std::uint32_t>(grid.nrows)});
    add_int(kTagBits, kTypeShort, {static_cast<std::uint32_t>(bpp * 8)});
    add_int(kTagCompression, kTypeShort, {opts.deflate ? 8u : 1u});
    add_int(kTagPhotometric, kTypeShort, {1});
    add_int(kTagSamplesPerPixel, kTypeShort, {1});
    add_int(kTagSampleFormat, kTypeShort, {opts.float32 ? 3u : 2u});
    std::vector<std::uint32_t> offs(blocks.size(), 0), cnts(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) cnts[i] = static_cast<std::uint32_t>(blocks[i].size());
    if (tiled) {
        add_int(kTagTileWidth, kTypeLong, {static_cast<std::uint32_t>(opts.tile_size)});
        add_int(kTagTileHeight, kTypeLong, {static_cast<std::uint32_t>(opts.tile_size)});
        add_int(kTagTileOffsets, kTypeLong, offs);
        add_int(kTagTileByteCounts, kTypeLong, cnts);
    } else {
        add_int(kTagRowsPerStrip, kTypeLong, {static_cast<std::uint32_t>(std::max(1, opts.rows_per_strip))});
        add_int(kTagStripOffsets, kTypeLong, offs);
        add_int(kTagStripByteCounts, kTypeLong, cnts);
    }
    add_dbl(kTagModelPixelScale, {grid.cell_size, grid.cell_size, 0.0});
    add_dbl(kTagModelTiepoint, {0.0, 0.0, 0.0, grid.x_origin, grid.y_origin, 0.0});
    if (!nodata_str.empty()) {
        Entry e{kTagGdalNodata, kTypeAscii, static_cast<std::uint32_t>(nodata_str.size()), {}, {}, nodata_str};
        entries.push_back(e);
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.tag < b.tag; });

    // layout: header(8) | IFD | out-of-line tag data | blocks
    const std::size_t ifd_size = 2 + entries.size() * 12 + 4;
    std::size_t extra_off = 8 + ifd_size;
    std::vector<std::size_t> entry_data_off(entries.size(), 0);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const std::size_t bytes = type_size(entries[i].type) * entries[i].count;
        if (bytes > 4) {
            if (extra_off % 2) ++extra_off;
            entry_data_off[i] = extra_off;
            extra_off += bytes;
        }
    }
    std::size_t data_off = extra_off;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (data_off % 2) ++data_off;
        offs[i] = static_cast<std::uint32_t>(data_off);
        data_off += blocks[i].size();
    }
    // patch the offsets array now that block positions are known
    for (auto& e : entries)
        if (e.tag == kTagStripOffsets || e.tag == kTagTileOffsets) e.ints = offs;

    std::string out(data_off, '\0');
    auto put16 = [&](std::size_t off, std::uint16_t v) { std::memcpy(&out[off], &v, 2); };
    auto put32 = [&](std::size_t off, std::uint32_t v) { std::memcpy(&out[off], &v, 4); };
    auto put64f = [&](std::size_t off, double v) { std::memcpy(&out[off], &v, 8); };

    out[0] = 'I'; out[1] = 'I';
    put16(2, 42);
    put32(4, 8);
    put16(8, static_cast<std::uint16_t>(entries.size()));
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const Entry& e = entries[i];
        const std::size_t at = 10 + i * 12;
        put16(at, e.tag);
        put16(at + 2, e.type);
        put32(at + 4, e.count);
        const std::size_t bytes = type_size(e.type) * e.count;
        const std::size_t dst = (bytes <= 4) ? at + 8 : entry_data_off[i];
        if (bytes > 4) put32(at + 8, static_cast<std::uint32_t>(dst));
        if (e.type == kTypeShort)
            for (std::uint32_t k = 0; k < e.count; ++k) put16(dst + 2 * k, static_cast<std::uint16_t>(e.ints[k]));
        else if (e.type == kTypeLong)
            for (std::uint32_t k = 0; k < e.count; ++k) put32(dst + 4 * k, e.ints[k]);
        else if (e.type == kTypeDouble)
            for (std::uint32_t k = 0; k < e.count; ++k) put64f(dst + 8 * k, e.dbls[k]);
        else if (e.type == kTypeAscii)
            std::memcpy(&out[dst], e.ascii.data(), e.ascii.size());
    }
    put32(8 + 2 + entries.size() * 12, 0);  // next IFD: none
    for (std::size_t i = 0; i < blocks.size(); ++i)
        std::memcpy(&out[offs[i]], blocks[i].data(), blocks[i].size());

    atomic_write_file(path, out);
}

RasterGrid load_raster(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("raster file not found: " + path.string());
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".asc" || ext == ".txt") return load_ascii_grid(path);
    if (ext == ".tif" || ext == ".tiff") return load_geotiff(path);
    throw UnsupportedFormat("unknown raster extension: " + path.string());
}

}  // namespace habitat
