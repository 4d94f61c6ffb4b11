#include "deqcert/data.hpp"

#include "deqcert/errors.hpp"
#include "deqcert/losses.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

namespace deqcert {

namespace {

std::string hex(std::uint32_t v) {
    std::ostringstream s;
    s << "0x" << std::hex << std::setw(8) << std::setfill('0') << v;
    return s.str();
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& raw, std::size_t offset) {
    return (static_cast<std::uint32_t>(raw[offset]) << 24) | (static_cast<std::uint32_t>(raw[offset + 1]) << 16) |
           (static_cast<std::uint32_t>(raw[offset + 2]) << 8) | static_cast<std::uint32_t>(raw[offset + 3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                           static_cast<char>(v)};
    out.write(bytes, 4);
}

} // namespace

IdxArray read_idx_file(const std::string& path, std::uint32_t expected_magic) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("idx: cannot open " + path);
    const std::vector<std::uint8_t> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (raw.size() < 4) throw DataError("idx: " + path + " is truncated (no magic number)");
    IdxArray array;
    array.magic = read_be32(raw, 0);
    if (array.magic != expected_magic)
        throw DataError("idx: " + path + " has magic " + hex(array.magic) + ", expected " + hex(expected_magic));

    const std::size_t ndims = array.magic & 0xffu;
    const std::size_t header = 4 + 4 * ndims;
    if (raw.size() < header) throw DataError("idx: " + path + " is truncated (incomplete header)");
    std::size_t payload = 1;
    for (std::size_t i = 0; i < ndims; ++i) {
        array.dims.push_back(read_be32(raw, 4 + 4 * i));
        payload *= array.dims.back();
    }
    if (raw.size() < header + payload) {
        std::ostringstream msg;
        msg << "idx: " << path << " is truncated (payload " << raw.size() - header << " bytes, expected " << payload
            << ")";
        throw DataError(msg.str());
    }
    array.bytes.assign(raw.begin() + static_cast<std::ptrdiff_t>(header),
                       raw.begin() + static_cast<std::ptrdiff_t>(header + payload));
    return array;
}

void write_idx_file(const std::string& path, const IdxArray& array) {
    std::size_t payload = 1;
    for (std::uint32_t d : array.dims) payload *= d;
    if (payload != array.bytes.size() || (array.magic & 0xffu) != array.dims.size())
        throw DataError("idx: array header does not match its payload");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("idx: cannot write " + path);
    write_be32(out, array.magic);
    for (std::uint32_t d : array.dims) write_be32(out, d);
    out.write(reinterpret_cast<const char*>(array.bytes.data()), static_cast<std::streamsize>(array.bytes.size()));
    if (!out) throw DataError("idx: write failed for " + path);
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path, std::size_t classes,
                 std::size_t limit) {
    const IdxArray images = read_idx_file(images_path, idx_images_magic);
    const IdxArray labels = read_idx_file(labels_path, idx_labels_magic);
    if (images.dims[0] != labels.dims[0]) {
        std::ostringstream msg;
        msg << "idx: " << images.dims[0] << " images but " << labels.dims[0] << " labels";
        throw DataError(msg.str());
    }
    std::size_t count = images.dims[0];
    if (limit > 0 && limit < count) count = limit;
    const std::size_t pixels = static_cast<std::size_t>(images.dims[1]) * images.dims[2];

    Dataset data;
    data.kind = TaskKind::classification;
    data.classes = classes;
    data.source = "idx";
    data.inputs.reserve(count);
    data.targets.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        Vector d(pixels);
        for (std::size_t p = 0; p < pixels; ++p) d[p] = images.bytes[s * pixels + p] / 255.0;
        const std::size_t label = labels.bytes[s];
        if (label >= classes) {
            std::ostringstream msg;
            msg << "idx: label " << label << " at index " << s << " is outside " << classes << " classes";
            throw DataError(msg.str());
        }
        Vector y(classes, 0.0);
        y[label] = 1.0;
        data.inputs.push_back(std::move(d));
        data.targets.push_back(std::move(y));
    }
    return data;
}

void write_idx(const std::string& images_path, const std::string& labels_path, const Dataset& data,
               std::size_t rows, std::size_t cols) {
    if (data.input_dim() != rows * cols) throw DataError("idx: input dimension does not match rows*cols");
    IdxArray images{idx_images_magic, {static_cast<std::uint32_t>(data.size()), static_cast<std::uint32_t>(rows),
                                       static_cast<std::uint32_t>(cols)},
                    {}};
    IdxArray labels{idx_labels_magic, {static_cast<std::uint32_t>(data.size())}, {}};
    images.bytes.reserve(data.size() * rows * cols);
    for (std::size_t s = 0; s < data.size(); ++s) {
        for (double v : data.inputs[s]) {
            if (!(v >= 0.0 && v <= 1.0)) throw DataError("idx: pixel value outside [0, 1]");
            images.bytes.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
        }
        labels.bytes.push_back(static_cast<std::uint8_t>(hot_index(data.targets[s])));
    }
    write_idx_file(images_path, images);
    write_idx_file(labels_path, labels);
}

} // namespace deqcert
