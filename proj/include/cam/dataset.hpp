#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cam {

constexpr int kMaxFeatures = 63;

/// Missingness pattern over d features; bit j set means feature j (0-based)
/// is missing. Ordered lexicographically on the bit string with feature 1
/// leading.
class Pattern {
public:
    Pattern() = default;
    Pattern(std::uint64_t missing_bits, int d);

    static Pattern complete(int d) { return Pattern(0, d); }
    static Pattern all_missing(int d);
    static Pattern from_string(const std::string& s);

    std::string to_string() const;

    std::uint64_t bits() const noexcept { return bits_; }
    int d() const noexcept { return d_; }
    bool is_complete() const noexcept { return bits_ == 0; }
    bool missing(int j) const noexcept { return (bits_ >> j) & 1U; }
    /// Number of observed coordinates.
    int observed_count() const noexcept;
    std::vector<int> observed() const;

    /// Partial order: the missing set of *this is contained in that of other.
    bool subset_of(const Pattern& other) const noexcept {
        return (bits_ & ~other.bits_) == 0;
    }

    bool operator==(const Pattern& o) const noexcept = default;
    std::strong_ordering operator<=>(const Pattern& o) const noexcept;

private:
    std::uint64_t bits_ = 0;
    int d_ = 0;
};

/// Entrywise minimum: missing only where both are missing.
Pattern pmin(const Pattern& a, const Pattern& b);
/// Entrywise maximum: missing where either is missing.
Pattern pmax(const Pattern& a, const Pattern& b);

class MaskedDataset {
public:
    MaskedDataset() = default;
    /// `x` is row-major n-by-d with NaN marking a missing cell.
    MaskedDataset(int d, std::vector<double> x, std::vector<double> y,
                  std::vector<std::string> feature_names = {}, std::string response_name = "y");

    std::size_t n() const noexcept { return y_.size(); }
    int d() const noexcept { return d_; }

    double x(std::size_t i, int j) const { return x_[i * d_ + j]; }
    std::span<const double> row(std::size_t i) const {
        return {x_.data() + i * d_, static_cast<std::size_t>(d_)};
    }
    double y(std::size_t i) const { return y_[i]; }
    bool observed(std::size_t i, int j) const { return !patterns_[i].missing(j); }
    const Pattern& pattern(std::size_t i) const { return patterns_[i]; }

    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    const std::string& response_name() const noexcept { return response_name_; }

private:
    int d_ = 0;
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<Pattern> patterns_;
    std::vector<std::string> feature_names_;
    std::string response_name_;
};

/// Dataset restricted to the given rows, in the given order.
MaskedDataset select_rows(const MaskedDataset& ds, std::span<const std::size_t> rows);

struct CsvSchema {
    // Empty means every column other than the response.
    std::vector<std::string> features;
    // Empty means no response column; y is then 0 for every row.
    std::string response;
    std::vector<std::string> na_markers{"NA", ""};
    char delimiter = ',';
};

MaskedDataset ingest_csv(std::istream& in, const CsvSchema& schema);

struct Record {
    std::span<const double> x;
    double y;
};

/// Rows of a dataset restricted to the coordinates a pattern observes.
class ProjectedSample {
public:
    ProjectedSample() = default;
    ProjectedSample(int dim, std::vector<double> x, std::vector<double> y,
                    std::vector<std::size_t> source_rows = {});

    std::size_t size() const noexcept { return y_.size(); }
    int dim() const noexcept { return dim_; }
    std::span<const double> x(std::size_t i) const {
        return {x_.data() + i * dim_, static_cast<std::size_t>(dim_)};
    }
    double y(std::size_t i) const { return y_[i]; }
    Record operator[](std::size_t i) const { return {x(i), y_[i]}; }
    const std::vector<std::size_t>& source_rows() const noexcept { return rows_; }

    ProjectedSample subset(std::span<const std::size_t> idx) const;
    ProjectedSample with_responses(std::vector<double> y) const;

private:
    int dim_ = 0;
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<std::size_t> rows_;
};

ProjectedSample project(const MaskedDataset& ds, std::span<const std::size_t> rows, const Pattern& m);
std::vector<double> project_point(std::span<const double> x, const Pattern& m);

struct PatternGroups {
    int d = 0;
    std::map<Pattern, std::vector<std::size_t>> groups;

    std::size_t n() const;
    std::size_t count(const Pattern& m) const;
    const std::vector<std::size_t>& rows(const Pattern& m) const;
    const std::vector<std::size_t>& complete() const { return rows(Pattern::complete(d)); }
    std::size_t n0() const { return count(Pattern::complete(d)); }
};

PatternGroups group_by_pattern(const MaskedDataset& ds);

struct AdjustmentEntry {
    Pattern pattern;
    std::vector<std::size_t> rows;
};

struct AdjustmentSet {
    int d = 0;
    bool integrated = false;
    std::vector<AdjustmentEntry> entries;

    std::size_t size() const noexcept { return entries.size(); }
    std::vector<Pattern> patterns() const;
    std::optional<std::size_t> index_of(const Pattern& m) const;
};

/// Union of the incomplete groups whose pattern is <= m.
std::vector<std::size_t> integration_rows(const PatternGroups& groups, const Pattern& m);

AdjustmentSet select_adjustment_set(const PatternGroups& groups, std::size_t min_count = 20,
                                    bool integrate = false);

/// Adjustment set over explicitly chosen patterns, no count threshold.
AdjustmentSet make_adjustment_set(const PatternGroups& groups, std::vector<Pattern> patterns,
                                  bool integrate = false);

}  // namespace cam
