#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "embedding.hpp"
#include "io_jsonl.hpp"
#include "error.hpp"

namespace voxref {

// Layout (all integers little-endian):
//   "PVE1" | u16 version | u32 dim | u64 count | u16 len + model_name
//   count x { u16 len + utterance_id | u16 len + identity_id | u8 label |
//             u16 len + dataset | dim x f32 }
inline constexpr std::array<char, 4> kBinaryMagic{'P', 'V', 'E', '1'};
inline constexpr std::uint16_t kBinaryVersion = 1;

namespace detail {

class ByteWriter {
public:
    template <typename T>
    void put(T v) {
        static_assert(std::is_integral_v<T>);
        for (std::size_t i = 0; i < sizeof(T); ++i)
            buf_.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
    }
    void put_f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
    void put_string(const std::string& s) {
        if (s.size() > 0xFFFF) throw Error("string longer than 65535 bytes: '" + s.substr(0, 32) + "...'");
        put(static_cast<std::uint16_t>(s.size()));
        buf_.insert(buf_.end(), s.begin(), s.end());
    }
    void put_raw(std::span<const char> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }
    const std::vector<std::uint8_t>& bytes() const noexcept { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint64_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }

    template <typename T>
    T get(const char* what) {
        require(sizeof(T), what);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }
    float get_f32(const char* what) { return std::bit_cast<float>(get<std::uint32_t>(what)); }
    std::string get_string(const char* what) {
        const auto len = get<std::uint16_t>(what);
        require(len, what);
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), len);
        pos_ += len;
        return s;
    }
    std::span<const std::uint8_t> get_raw(std::size_t n, const char* what) {
        require(n, what);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

private:
    void require(std::size_t n, const char* what) const {
        if (remaining() < n)
            throw ParseError(data_.size(), std::string("truncated while reading ") + what);
    }

    std::span<const std::uint8_t> data_;
    std::uint64_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> encode_binary(const EmbeddingStore& store) {
    detail::ByteWriter w;
    w.put_raw(kBinaryMagic);
    w.put(kBinaryVersion);
    w.put(static_cast<std::uint32_t>(store.dim()));
    w.put(static_cast<std::uint64_t>(store.size()));
    w.put_string(store.model_name());
    for (const auto& r : store.records()) {
        w.put_string(r.utterance_id);
        w.put_string(r.identity_id);
        w.put(static_cast<std::uint8_t>(r.label));
        w.put_string(r.dataset_tag);
        for (float v : r.embedding.values()) w.put_f32(v);
    }
    return w.bytes();
}

inline EmbeddingStore decode_binary(std::span<const std::uint8_t> data) {
    detail::ByteReader r(data);
    auto magic = r.get_raw(4, "magic");
    if (std::memcmp(magic.data(), kBinaryMagic.data(), 4) != 0)
        throw ParseError(0, "bad magic (expected PVE1)");
    const auto version_at = r.offset();
    const auto version = r.get<std::uint16_t>("format version");
    if (version != kBinaryVersion)
        throw ParseError(version_at, "unsupported format version " + std::to_string(version));
    const auto dim_at = r.offset();
    const auto dim = r.get<std::uint32_t>("dim");
    const auto count = r.get<std::uint64_t>("record count");
    if (dim == 0 && count != 0) throw ParseError(dim_at, "dim is 0 but record count is nonzero");

    EmbeddingStore store(r.get_string("model_name"));
    store.set_dim(dim);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto rec_at = r.offset();
        UtteranceRecord rec;
        rec.utterance_id = r.get_string("utterance_id");
        rec.identity_id = r.get_string("identity_id");
        const auto label_at = r.offset();
        const auto label = r.get<std::uint8_t>("label");
        if (label > 1) throw ParseError(label_at, "invalid label byte " + std::to_string(label));
        rec.label = static_cast<Label>(label);
        rec.dataset_tag = r.get_string("dataset tag");
        const auto values_at = r.offset();
        std::vector<float> values(dim);
        for (auto& v : values) v = r.get_f32("embedding values");
        try {
            rec.embedding = Embedding(std::move(values));
        } catch (const Error& e) {
            throw ParseError(values_at, e.what());
        }
        try {
            store.append(std::move(rec));
        } catch (const Error& e) {
            throw ParseError(rec_at, e.what());
        }
    }
    if (r.remaining() != 0)
        throw ParseError(r.offset(), "declared record count " + std::to_string(count) +
                                         " is followed by " + std::to_string(r.remaining()) +
                                         " trailing bytes");
    return store;
}

inline void write_binary(const std::filesystem::path& path, const EmbeddingStore& store) {
    const auto bytes = encode_binary(store);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline EmbeddingStore ingest_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "' for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_binary(bytes);
}

/// True when the file starts with the binary magic.
inline bool looks_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::array<char, 4> head{};
    in.read(head.data(), head.size());
    return in.gcount() == 4 && head == kBinaryMagic;
}

/// Loads either format, sniffing the magic.
inline EmbeddingStore load_store(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error("no such file: '" + path.string() + "'");
    return looks_binary(path) ? ingest_binary(path) : ingest_jsonl(path);
}

}  // namespace voxref
