#include "cam/dataset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <iterator>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "cam/error.hpp"

namespace cam {

namespace {

std::uint64_t lex_key(std::uint64_t bits, int d) {
    std::uint64_t key = 0;
    for (int j = 0; j < d; ++j)
        if ((bits >> j) & 1U) key |= std::uint64_t{1} << (d - 1 - j);
    return key;
}

void check_dim(int d) {
    if (d < 1 || d > kMaxFeatures)
        throw DimensionMismatch("feature dimension must lie in [1, " + std::to_string(kMaxFeatures) + "]");
}

}  // namespace

Pattern::Pattern(std::uint64_t missing_bits, int d) : bits_(missing_bits), d_(d) {
    check_dim(d);
    if (d < 64 && (missing_bits >> d) != 0) throw PatternError("pattern bits exceed dimension");
}

Pattern Pattern::all_missing(int d) {
    check_dim(d);
    return Pattern((std::uint64_t{1} << d) - 1, d);
}

Pattern Pattern::from_string(const std::string& s) {
    const int d = static_cast<int>(s.size());
    check_dim(d);
    std::uint64_t bits = 0;
    for (int j = 0; j < d; ++j) {
        if (s[j] == '1')
            bits |= std::uint64_t{1} << j;
        else if (s[j] != '0')
            throw PatternError("pattern string must contain only 0 and 1: '" + s + "'");
    }
    return Pattern(bits, d);
}

std::string Pattern::to_string() const {
    std::string s(d_, '0');
    for (int j = 0; j < d_; ++j)
        if (missing(j)) s[j] = '1';
    return s;
}

int Pattern::observed_count() const noexcept { return d_ - std::popcount(bits_); }

std::vector<int> Pattern::observed() const {
    std::vector<int> out;
    out.reserve(observed_count());
    for (int j = 0; j < d_; ++j)
        if (!missing(j)) out.push_back(j);
    return out;
}

std::strong_ordering Pattern::operator<=>(const Pattern& o) const noexcept {
    if (auto c = d_ <=> o.d_; c != 0) return c;
    return lex_key(bits_, d_) <=> lex_key(o.bits_, o.d_);
}

Pattern pmin(const Pattern& a, const Pattern& b) {
    if (a.d() != b.d()) throw DimensionMismatch("pmin: patterns of different dimension");
    return Pattern(a.bits() & b.bits(), a.d());
}

Pattern pmax(const Pattern& a, const Pattern& b) {
    if (a.d() != b.d()) throw DimensionMismatch("pmax: patterns of different dimension");
    return Pattern(a.bits() | b.bits(), a.d());
}

MaskedDataset::MaskedDataset(int d, std::vector<double> x, std::vector<double> y,
                             std::vector<std::string> feature_names, std::string response_name)
    : d_(d), x_(std::move(x)), y_(std::move(y)), feature_names_(std::move(feature_names)),
      response_name_(std::move(response_name)) {
    check_dim(d);
    if (x_.size() != y_.size() * static_cast<std::size_t>(d))
        throw DimensionMismatch("feature matrix has " + std::to_string(x_.size()) +
                                " cells, expected " + std::to_string(y_.size() * d));
    if (feature_names_.empty())
        for (int j = 0; j < d; ++j) feature_names_.push_back("x" + std::to_string(j + 1));
    if (feature_names_.size() != static_cast<std::size_t>(d))
        throw DimensionMismatch("feature name count differs from d");
    patterns_.reserve(y_.size());
    for (std::size_t i = 0; i < y_.size(); ++i) {
        if (!std::isfinite(y_[i]))
            throw DataError("row " + std::to_string(i + 1) + ": response is missing or non-finite");
        std::uint64_t bits = 0;
        for (int j = 0; j < d; ++j) {
            const double v = x_[i * d + j];
            if (std::isnan(v))
                bits |= std::uint64_t{1} << j;
            else if (!std::isfinite(v))
                throw DataError("row " + std::to_string(i + 1) + ", feature " + std::to_string(j + 1) +
                                ": non-finite value");
        }
        patterns_.emplace_back(bits, d);
    }
}

MaskedDataset select_rows(const MaskedDataset& ds, std::span<const std::size_t> rows) {
    std::vector<double> x;
    std::vector<double> y;
    x.reserve(rows.size() * ds.d());
    y.reserve(rows.size());
    for (auto i : rows) {
        if (i >= ds.n()) throw DimensionMismatch("row index out of range");
        auto r = ds.row(i);
        x.insert(x.end(), r.begin(), r.end());
        y.push_back(ds.y(i));
    }
    return MaskedDataset(ds.d(), std::move(x), std::move(y), ds.feature_names(), ds.response_name());
}

namespace {

// RFC 4180 records; quoted fields may contain delimiters, quotes and newlines.
std::vector<std::vector<std::string>> read_records(std::istream& in, char delim) {
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> rec;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == delim) {
            rec.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                rec.push_back(std::move(field));
                records.push_back(std::move(rec));
            }
            rec.clear();
            field.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) throw DataError("unterminated quoted field at end of input");
    if (any || !field.empty()) {
        rec.push_back(std::move(field));
        records.push_back(std::move(rec));
    }
    return records;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::optional<double> parse_number(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace

MaskedDataset ingest_csv(std::istream& in, const CsvSchema& schema) {
    auto records = read_records(in, schema.delimiter);
    if (records.empty()) throw DataError("CSV input has no header row");
    std::vector<std::string> header;
    for (const auto& h : records.front()) header.push_back(trim(h));

    std::unordered_map<std::string, std::size_t> column;
    for (std::size_t c = 0; c < header.size(); ++c) column.emplace(header[c], c);
    auto locate = [&](const std::string& name) {
        auto it = column.find(name);
        if (it == column.end()) throw DataError("column '" + name + "' not found in header");
        return it->second;
    };

    std::optional<std::size_t> ycol;
    if (!schema.response.empty()) ycol = locate(schema.response);

    std::vector<std::size_t> xcols;
    std::vector<std::string> names;
    if (schema.features.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c)
            if (!ycol || c != *ycol) {
                xcols.push_back(c);
                names.push_back(header[c]);
            }
    } else {
        for (const auto& f : schema.features) {
            xcols.push_back(locate(f));
            names.push_back(f);
        }
    }
    if (xcols.empty()) throw DataError("at least one feature column is required");
    if (ycol && std::find(xcols.begin(), xcols.end(), *ycol) != xcols.end())
        throw DataError("response column '" + schema.response + "' is also listed as a feature");

    auto is_na = [&](const std::string& cell) {
        return std::find(schema.na_markers.begin(), schema.na_markers.end(), cell) !=
               schema.na_markers.end();
    };

    const int d = static_cast<int>(xcols.size());
    std::vector<double> x;
    std::vector<double> y;
    x.reserve((records.size() - 1) * d);
    y.reserve(records.size() - 1);
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        const std::string where = "row " + std::to_string(r);
        if (rec.size() != header.size())
            throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                            std::to_string(rec.size()));
        for (std::size_t k = 0; k < xcols.size(); ++k) {
            const std::string cell = trim(rec[xcols[k]]);
            if (is_na(cell)) {
                x.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            auto v = parse_number(cell);
            if (!v) throw DataError(where + ", column '" + names[k] + "': non-numeric value '" + cell + "'");
            x.push_back(*v);
        }
        if (ycol) {
            const std::string cell = trim(rec[*ycol]);
            if (is_na(cell)) throw DataError(where + ": missing response value");
            auto v = parse_number(cell);
            if (!v)
                throw DataError(where + ", column '" + schema.response + "': non-numeric value '" + cell + "'");
            y.push_back(*v);
        } else {
            y.push_back(0.0);
        }
    }
    return MaskedDataset(d, std::move(x), std::move(y), std::move(names),
                         schema.response.empty() ? std::string("y") : schema.response);
}

ProjectedSample::ProjectedSample(int dim, std::vector<double> x, std::vector<double> y,
                                 std::vector<std::size_t> source_rows)
    : dim_(dim), x_(std::move(x)), y_(std::move(y)), rows_(std::move(source_rows)) {
    if (dim < 0 || x_.size() != y_.size() * static_cast<std::size_t>(dim))
        throw DimensionMismatch("projected sample: coordinate count does not match dim * size");
    if (rows_.empty()) {
        rows_.resize(y_.size());
        for (std::size_t i = 0; i < rows_.size(); ++i) rows_[i] = i;
    }
    if (rows_.size() != y_.size()) throw DimensionMismatch("projected sample: source row count mismatch");
}

ProjectedSample ProjectedSample::subset(std::span<const std::size_t> idx) const {
    std::vector<double> xs;
    std::vector<double> y;
    std::vector<std::size_t> rows;
    xs.reserve(idx.size() * dim_);
    y.reserve(idx.size());
    rows.reserve(idx.size());
    for (auto i : idx) {
        if (i >= size()) throw DimensionMismatch("subset index out of range");
        auto xi = this->x(i);
        xs.insert(xs.end(), xi.begin(), xi.end());
        y.push_back(y_[i]);
        rows.push_back(rows_[i]);
    }
    ProjectedSample out;
    out.dim_ = dim_;
    out.x_ = std::move(xs);
    out.y_ = std::move(y);
    out.rows_ = std::move(rows);
    return out;
}

ProjectedSample ProjectedSample::with_responses(std::vector<double> y) const {
    if (y.size() != y_.size()) throw DimensionMismatch("with_responses: size mismatch");
    ProjectedSample out = *this;
    out.y_ = std::move(y);
    return out;
}

ProjectedSample project(const MaskedDataset& ds, std::span<const std::size_t> rows, const Pattern& m) {
    if (m.d() != ds.d()) throw DimensionMismatch("pattern dimension differs from dataset dimension");
    const auto obs = m.observed();
    std::vector<double> x;
    std::vector<double> y;
    x.reserve(rows.size() * obs.size());
    y.reserve(rows.size());
    for (auto i : rows) {
        if (i >= ds.n()) throw DimensionMismatch("row index out of range");
        if (!ds.pattern(i).subset_of(m)) {
            for (int j : obs)
                if (!ds.observed(i, j))
                    throw PatternError("row " + std::to_string(i + 1) + " lacks feature " +
                                       std::to_string(j + 1) + " required by pattern " + m.to_string());
        }
        for (int j : obs) x.push_back(ds.x(i, j));
        y.push_back(ds.y(i));
    }
    return ProjectedSample(static_cast<int>(obs.size()), std::move(x), std::move(y),
                           std::vector<std::size_t>(rows.begin(), rows.end()));
}

std::vector<double> project_point(std::span<const double> x, const Pattern& m) {
    if (x.size() != static_cast<std::size_t>(m.d())) throw DimensionMismatch("query point dimension differs from d");
    std::vector<double> out;
    for (int j : m.observed()) out.push_back(x[j]);
    return out;
}

std::size_t PatternGroups::n() const {
    std::size_t total = 0;
    for (const auto& [m, rows] : groups) total += rows.size();
    return total;
}

std::size_t PatternGroups::count(const Pattern& m) const {
    auto it = groups.find(m);
    return it == groups.end() ? 0 : it->second.size();
}

const std::vector<std::size_t>& PatternGroups::rows(const Pattern& m) const {
    static const std::vector<std::size_t> empty;
    auto it = groups.find(m);
    return it == groups.end() ? empty : it->second;
}

PatternGroups group_by_pattern(const MaskedDataset& ds) {
    PatternGroups g;
    g.d = ds.d();
    for (std::size_t i = 0; i < ds.n(); ++i) g.groups[ds.pattern(i)].push_back(i);
    return g;
}

std::vector<Pattern> AdjustmentSet::patterns() const {
    std::vector<Pattern> out;
    for (const auto& e : entries) out.push_back(e.pattern);
    return out;
}

std::optional<std::size_t> AdjustmentSet::index_of(const Pattern& m) const {
    for (std::size_t k = 0; k < entries.size(); ++k)
        if (entries[k].pattern == m) return k;
    return std::nullopt;
}

std::vector<std::size_t> integration_rows(const PatternGroups& groups, const Pattern& m) {
    std::vector<std::size_t> rows;
    for (const auto& [p, idx] : groups.groups)
        if (!p.is_complete() && p.subset_of(m)) rows.insert(rows.end(), idx.begin(), idx.end());
    std::sort(rows.begin(), rows.end());
    return rows;
}

AdjustmentSet select_adjustment_set(const PatternGroups& groups, std::size_t min_count, bool integrate) {
    if (groups.n0() == 0) throw InsufficientData("no complete cases");
    AdjustmentSet set;
    set.d = groups.d;
    set.integrated = integrate;
    for (const auto& [m, idx] : groups.groups) {
        if (m.is_complete()) continue;
        auto rows = integrate ? integration_rows(groups, m) : idx;
        if (rows.size() >= min_count) set.entries.push_back({m, std::move(rows)});
    }
    return set;
}

AdjustmentSet make_adjustment_set(const PatternGroups& groups, std::vector<Pattern> patterns, bool integrate) {
    if (groups.n0() == 0) throw InsufficientData("no complete cases");
    std::sort(patterns.begin(), patterns.end());
    patterns.erase(std::unique(patterns.begin(), patterns.end()), patterns.end());
    AdjustmentSet set;
    set.d = groups.d;
    set.integrated = integrate;
    for (const auto& m : patterns) {
        if (m.d() != groups.d) throw DimensionMismatch("pattern " + m.to_string() + " has the wrong dimension");
        if (m.is_complete()) throw PatternError("the complete pattern cannot be an adjustment pattern");
        set.entries.push_back({m, integrate ? integration_rows(groups, m) : groups.rows(m)});
    }
    return set;
}

}  // namespace cam
