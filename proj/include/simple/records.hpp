#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "simple/dataset.hpp"

namespace simple {

/// Identifies one (sample, pass) observation. Ordered sample-major.
struct RecordKey {
    SampleId sample_id = 0;
    std::uint32_t pass = 0;

    auto operator<=>(const RecordKey&) const = default;
};

/// One stochastic pass over one sample: pseudo-label, per-class scores and
/// the embedding from the same pass.
struct EnsembleRecord {
    SampleId sample_id = 0;
    std::uint32_t pass = 0;
    int label = 0;
    std::vector<float> scores;     // length n_classes
    std::vector<float> embedding;  // length e_dim

    RecordKey key() const { return {sample_id, pass}; }
    bool operator==(const EnsembleRecord&) const = default;
};

/// M samples x N passes. Records are kept sorted by (sample_id, pass), so
/// the records of the i-th sample occupy [i*N, (i+1)*N).
class EnsembleRecordSet {
public:
    EnsembleRecordSet() = default;

    /// Sorts by key, then checks: exactly N records with passes 0..N-1 per
    /// sample, constant embedding length, labels in [0, n_classes), scores
    /// of length n_classes in [0,1] summing to 1 within 1e-4.
    /// Throws IntegrityError otherwise.
    EnsembleRecordSet(std::uint32_t n_passes, std::uint32_t e_dim, std::uint32_t n_classes,
                      std::vector<EnsembleRecord> records);

    std::size_t n_samples() const { return n_passes_ == 0 ? 0 : records_.size() / n_passes_; }
    std::uint32_t n_passes() const { return n_passes_; }
    std::uint32_t e_dim() const { return e_dim_; }
    std::uint32_t n_classes() const { return n_classes_; }
    std::size_t size() const { return records_.size(); }

    const std::vector<EnsembleRecord>& records() const { return records_; }
    const EnsembleRecord& operator[](std::size_t i) const { return records_[i]; }

    /// The N records of the i-th sample (in id order).
    std::span<const EnsembleRecord> sample_records(std::size_t i) const {
        return {records_.data() + i * n_passes_, n_passes_};
    }
    SampleId sample_id_at(std::size_t i) const { return records_[i * n_passes_].sample_id; }

    bool operator==(const EnsembleRecordSet&) const = default;

private:
    std::uint32_t n_passes_ = 0;
    std::uint32_t e_dim_ = 0;
    std::uint32_t n_classes_ = 0;
    std::vector<EnsembleRecord> records_;
};

enum class RecordFormat { Jsonl, Binary };

RecordFormat parse_record_format(const std::string& text);

/// Size of the fixed binary header: magic(4) version(4) M(8) N(4) e_dim(4) n_classes(4).
inline constexpr std::size_t kBinaryHeaderBytes = 28;

/// Bytes per binary frame: sample_id u64, pass u32, label i32, scores, embedding.
constexpr std::size_t binary_frame_bytes(std::uint32_t n_classes, std::uint32_t e_dim) {
    return 8 + 4 + 4 + 4 * static_cast<std::size_t>(n_classes) + 4 * static_cast<std::size_t>(e_dim);
}

void write_records(const EnsembleRecordSet& set, const std::filesystem::path& path, RecordFormat format);

/// Detects the format from the leading bytes. Malformed content raises
/// FormatError with the byte offset; structural problems (missing passes,
/// duplicate keys) raise IntegrityError.
EnsembleRecordSet load_records(const std::filesystem::path& path);

}  // namespace simple
