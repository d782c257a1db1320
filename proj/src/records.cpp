#include "simple/records.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <nlohmann/json.hpp>

#include "simple/errors.hpp"

namespace simple {

using nlohmann::json;

EnsembleRecordSet::EnsembleRecordSet(std::uint32_t n_passes, std::uint32_t e_dim,
                                     std::uint32_t n_classes, std::vector<EnsembleRecord> records)
        : n_passes_(n_passes), e_dim_(e_dim), n_classes_(n_classes), records_(std::move(records)) {
    if (n_passes_ == 0) throw IntegrityError("record set needs at least one pass per sample");
    if (n_classes_ < 2) throw IntegrityError("record set needs n_classes >= 2");
    std::sort(records_.begin(), records_.end(),
              [](const EnsembleRecord& a, const EnsembleRecord& b) { return a.key() < b.key(); });
    if (records_.size() % n_passes_ != 0)
        throw IntegrityError("record count " + std::to_string(records_.size()) +
                             " is not a multiple of N=" + std::to_string(n_passes_));

    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        const auto expected_pass = static_cast<std::uint32_t>(i % n_passes_);
        const auto block_id = records_[i - expected_pass].sample_id;
        if (r.sample_id != block_id || r.pass != expected_pass)
            throw IntegrityError("sample " + std::to_string(block_id) + " does not have exactly passes 0.." +
                                 std::to_string(n_passes_ - 1));
        if (r.embedding.size() != e_dim_)
            throw IntegrityError("record (" + std::to_string(r.sample_id) + "," + std::to_string(r.pass) +
                                 ") embedding length " + std::to_string(r.embedding.size()) +
                                 " != e_dim " + std::to_string(e_dim_));
        if (r.label < 0 || static_cast<std::uint32_t>(r.label) >= n_classes_)
            throw IntegrityError("record (" + std::to_string(r.sample_id) + "," + std::to_string(r.pass) +
                                 ") label out of range");
        if (r.scores.size() != n_classes_)
            throw IntegrityError("record (" + std::to_string(r.sample_id) + "," + std::to_string(r.pass) +
                                 ") has " + std::to_string(r.scores.size()) + " scores, expected " +
                                 std::to_string(n_classes_));
        double total = 0.0;
        for (float s : r.scores) {
            if (!(s >= 0.0f && s <= 1.0f))
                throw IntegrityError("record (" + std::to_string(r.sample_id) + "," +
                                     std::to_string(r.pass) + ") score outside [0,1]");
            total += s;
        }
        if (std::abs(total - 1.0) > 1e-4)
            throw IntegrityError("record (" + std::to_string(r.sample_id) + "," + std::to_string(r.pass) +
                                 ") scores sum to " + std::to_string(total));
        for (float e : r.embedding)
            if (!std::isfinite(e))
                throw IntegrityError("record (" + std::to_string(r.sample_id) + "," +
                                     std::to_string(r.pass) + ") has a non-finite embedding value");
    }
}

RecordFormat parse_record_format(const std::string& text) {
    if (text == "jsonl") return RecordFormat::Jsonl;
    if (text == "binary") return RecordFormat::Binary;
    throw ConfigError("unknown record format '" + text + "' (expected jsonl or binary)");
}

namespace {

constexpr char kBinaryMagic[4] = {'S', 'P', 'L', 'E'};
constexpr const char* kJsonlMagic = "SPLE-JSONL";

template <typename T>
void put_le(std::string& buf, T value) {
    using U = std::make_unsigned_t<T>;
    auto bits = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf.push_back(static_cast<char>(bits & 0xff));
        bits = static_cast<U>(bits >> 8);
    }
}

void put_f32(std::string& buf, float value) { put_le(buf, std::bit_cast<std::uint32_t>(value)); }

class ByteReader {
public:
    explicit ByteReader(const std::string& data) : data_(data) {}

    template <typename T>
    T get(const char* what) {
        if (pos_ + sizeof(T) > data_.size())
            throw FormatError(std::string("truncated file while reading ") + what, pos_);
        std::make_unsigned_t<T> bits = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            bits |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(data_[pos_ + i]))
                    << (8 * i);
        pos_ += sizeof(T);
        return static_cast<T>(bits);
    }

    float get_f32(const char* what) { return std::bit_cast<float>(get<std::uint32_t>(what)); }

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    const std::string& data_;
    std::size_t pos_ = 0;
};

std::string encode_binary(const EnsembleRecordSet& set) {
    std::string buf;
    buf.reserve(kBinaryHeaderBytes + set.size() * binary_frame_bytes(set.n_classes(), set.e_dim()));
    buf.append(kBinaryMagic, 4);
    put_le<std::uint32_t>(buf, 1);
    put_le<std::uint64_t>(buf, set.n_samples());
    put_le<std::uint32_t>(buf, set.n_passes());
    put_le<std::uint32_t>(buf, set.e_dim());
    put_le<std::uint32_t>(buf, set.n_classes());
    for (const auto& r : set.records()) {
        put_le<std::uint64_t>(buf, r.sample_id);
        put_le<std::uint32_t>(buf, r.pass);
        put_le<std::int32_t>(buf, r.label);
        for (float s : r.scores) put_f32(buf, s);
        for (float e : r.embedding) put_f32(buf, e);
    }
    return buf;
}

EnsembleRecordSet decode_binary(const std::string& data) {
    ByteReader in(data);
    if (data.size() < 4 || std::memcmp(data.data(), kBinaryMagic, 4) != 0)
        throw FormatError("bad magic, expected SPLE", 0);
    in.get<std::uint32_t>("magic");
    const std::size_t version_at = in.pos();
    if (in.get<std::uint32_t>("version") != 1) throw FormatError("unsupported version", version_at);
    const auto m = in.get<std::uint64_t>("M");
    const auto n = in.get<std::uint32_t>("N");
    const auto e_dim = in.get<std::uint32_t>("e_dim");
    const auto k = in.get<std::uint32_t>("n_classes");
    if (n == 0) throw FormatError("header declares N=0", 16);
    if (k < 2) throw FormatError("header declares n_classes < 2", 24);

    const std::size_t frame = binary_frame_bytes(k, e_dim);
    if (m > in.remaining() / frame / n || in.remaining() != m * n * frame)
        throw FormatError("payload length " + std::to_string(in.remaining()) + " does not match " +
                              std::to_string(m) + "x" + std::to_string(n) + " frames of " +
                              std::to_string(frame) + " bytes",
                          kBinaryHeaderBytes);

    std::vector<EnsembleRecord> records(static_cast<std::size_t>(m * n));
    for (auto& r : records) {
        r.sample_id = in.get<std::uint64_t>("sample_id");
        r.pass = in.get<std::uint32_t>("pass");
        r.label = in.get<std::int32_t>("label");
        r.scores.resize(k);
        for (auto& s : r.scores) s = in.get_f32("score");
        r.embedding.resize(e_dim);
        for (auto& e : r.embedding) e = in.get_f32("embedding");
    }
    return EnsembleRecordSet(n, e_dim, k, std::move(records));
}

json floats_to_json(const std::vector<float>& values, const char* what) {
    json arr = json::array();
    for (float v : values) {
        if (!std::isfinite(v)) throw IntegrityError(std::string("non-finite ") + what + " cannot be written");
        arr.push_back(static_cast<double>(v));
    }
    return arr;
}

std::vector<float> json_to_floats(const json& arr) {
    std::vector<float> out;
    out.reserve(arr.size());
    for (const auto& v : arr) out.push_back(static_cast<float>(v.get<double>()));
    return out;
}

void encode_jsonl(const EnsembleRecordSet& set, std::ostream& out) {
    const json header = {{"magic", kJsonlMagic}, {"version", 1},           {"m", set.n_samples()},
                         {"n", set.n_passes()},  {"e_dim", set.e_dim()}, {"n_classes", set.n_classes()}};
    out << header.dump() << '\n';
    for (const auto& r : set.records()) {
        const json line = {{"sample_id", r.sample_id},
                           {"pass", r.pass},
                           {"label", r.label},
                           {"scores", floats_to_json(r.scores, "score")},
                           {"embedding", floats_to_json(r.embedding, "embedding")}};
        out << line.dump() << '\n';
    }
}

EnsembleRecordSet decode_jsonl(const std::string& data) {
    std::size_t pos = 0;
    auto next_line = [&](std::string& line) -> bool {
        if (pos >= data.size()) return false;
        const auto end = data.find('\n', pos);
        const auto stop = end == std::string::npos ? data.size() : end;
        line.assign(data, pos, stop - pos);
        pos = stop + 1;
        return true;
    };

    std::string line;
    if (!next_line(line)) throw FormatError("empty record file", 0);
    std::uint64_t m = 0;
    std::uint32_t n = 0, e_dim = 0, k = 0;
    try {
        const json header = json::parse(line);
        if (header.at("magic").get<std::string>() != kJsonlMagic)
            throw FormatError("bad magic, expected SPLE-JSONL", 0);
        if (header.at("version").get<int>() != 1) throw FormatError("unsupported version", 0);
        m = header.at("m").get<std::uint64_t>();
        n = header.at("n").get<std::uint32_t>();
        e_dim = header.at("e_dim").get<std::uint32_t>();
        k = header.at("n_classes").get<std::uint32_t>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed header: ") + e.what(), 0);
    }

    std::vector<EnsembleRecord> records;
    std::size_t line_start = pos;
    while (next_line(line)) {
        if (line.empty()) {
            line_start = pos;
            continue;
        }
        EnsembleRecord r;
        try {
            const json row = json::parse(line);
            r.sample_id = row.at("sample_id").get<SampleId>();
            r.pass = row.at("pass").get<std::uint32_t>();
            r.label = row.at("label").get<int>();
            r.scores = json_to_floats(row.at("scores"));
            r.embedding = json_to_floats(row.at("embedding"));
        } catch (const json::exception& e) {
            throw FormatError(std::string("malformed record: ") + e.what(), line_start);
        }
        if (r.scores.size() != k || r.embedding.size() != e_dim)
            throw FormatError("record length mismatch (scores " + std::to_string(r.scores.size()) +
                                  ", embedding " + std::to_string(r.embedding.size()) + ")",
                              line_start);
        records.push_back(std::move(r));
        line_start = pos;
    }
    if (records.size() != m * n)
        throw IntegrityError("header declares " + std::to_string(m) + "x" + std::to_string(n) +
                             " records, file has " + std::to_string(records.size()));
    return EnsembleRecordSet(n, e_dim, k, std::move(records));
}

}  // namespace

void write_records(const EnsembleRecordSet& set, const std::filesystem::path& path, RecordFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IntegrityError("cannot open " + path.string() + " for writing");
    if (format == RecordFormat::Binary) {
        const std::string buf = encode_binary(set);
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    } else {
        encode_jsonl(set, out);
    }
    if (!out) throw IntegrityError("write failed for " + path.string());
}

EnsembleRecordSet load_records(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IntegrityError("cannot open " + path.string());
    const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (!data.empty() && data.front() == '{') return decode_jsonl(data);
    return decode_binary(data);
}

}  // namespace simple
