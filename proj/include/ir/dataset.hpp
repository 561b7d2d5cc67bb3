#pragma once

// Tabular data: CSV ingest, conjunctive filters and group-by into
// measure-specific subsets.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "ir/error.hpp"

namespace ir {

enum class ColumnKind { number, integer, category, boolean, timestamp };

inline std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::number: return "number";
    case ColumnKind::integer: return "integer";
    case ColumnKind::category: return "category";
    case ColumnKind::boolean: return "boolean";
    case ColumnKind::timestamp: return "timestamp";
  }
  return "?";
}

inline std::optional<ColumnKind> column_kind_from_string(std::string_view s) {
  if (s == "number") return ColumnKind::number;
  if (s == "integer") return ColumnKind::integer;
  if (s == "category") return ColumnKind::category;
  if (s == "boolean") return ColumnKind::boolean;
  if (s == "timestamp") return ColumnKind::timestamp;
  return std::nullopt;
}

struct Column {
  std::string name;
  ColumnKind kind;
  bool operator==(const Column&) const = default;
};

using Schema = std::vector<Column>;

/// One scalar. monostate is the missing marker. integer and timestamp
/// columns (epoch seconds) both hold int64.
using Cell = std::variant<std::monostate, double, std::int64_t, std::string, bool>;

inline bool is_missing(const Cell& c) { return std::holds_alternative<std::monostate>(c); }

using RowId = std::uint64_t;

struct Record {
  RowId row_id;
  std::vector<Cell> values;
};

struct Dataset {
  std::string name;
  Schema schema;
  std::vector<Record> rows;  // rows[i].row_id == i

  std::size_t row_count() const { return rows.size(); }

  std::optional<std::size_t> column_index(std::string_view column) const {
    for (std::size_t i = 0; i < schema.size(); ++i)
      if (schema[i].name == column) return i;
    return std::nullopt;
  }

  std::size_t require_column(std::string_view column) const {
    if (auto i = column_index(column)) return *i;
    throw ValidationError("unknown column '" + std::string(column) + "'");
  }

  const Record& row(RowId id) const { return rows.at(static_cast<std::size_t>(id)); }

  const Cell& cell(RowId id, std::size_t column) const { return row(id).values[column]; }
};

using DatasetPtr = std::shared_ptr<const Dataset>;

// ---------------------------------------------------------------------------
// Cell parsing

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<bool> parse_bool(std::string_view s) {
  s = trim(s);
  if (iequals(s, "true")) return true;
  if (iequals(s, "false")) return false;
  return std::nullopt;
}

// Days since 1970-01-01 for a proleptic Gregorian date.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

// Epoch seconds, or ISO-8601 "YYYY-MM-DD[(T| )HH:MM[:SS]][Z]" in UTC.
inline std::optional<std::int64_t> parse_timestamp(std::string_view s) {
  s = trim(s);
  if (auto v = parse_int(s)) return v;
  auto num = [&](std::size_t pos, std::size_t len) -> std::optional<unsigned> {
    if (pos + len > s.size()) return std::nullopt;
    unsigned v = 0;
    auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, v);
    if (ec != std::errc{} || ptr != s.data() + pos + len) return std::nullopt;
    return v;
  };
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto y = num(0, 4), mo = num(5, 2), d = num(8, 2);
  if (!y || !mo || !d || *mo < 1 || *mo > 12 || *d < 1 || *d > 31) return std::nullopt;
  std::int64_t secs = days_from_civil(*y, *mo, *d) * 86400;
  std::string_view rest = s.substr(10);
  if (rest.empty()) return secs;
  if (rest.front() != 'T' && rest.front() != ' ') return std::nullopt;
  if (rest.back() == 'Z') rest.remove_suffix(1);
  const std::size_t base = 11;
  const std::size_t len = rest.size();
  if (len != 6 && len != 9) return std::nullopt;  // "THH:MM" or "THH:MM:SS"
  if (s[base + 2] != ':') return std::nullopt;
  auto h = num(base, 2), mi = num(base + 3, 2);
  if (!h || !mi || *h > 23 || *mi > 59) return std::nullopt;
  secs += *h * 3600 + *mi * 60;
  if (len == 9) {
    if (s[base + 5] != ':') return std::nullopt;
    auto sec = num(base + 6, 2);
    if (!sec || *sec > 60) return std::nullopt;
    secs += *sec;
  }
  return secs;
}

}  // namespace detail

/// Parses one CSV field under `kind`. Empty text is the missing marker;
/// nullopt means the text does not parse.
inline std::optional<Cell> parse_cell(std::string_view text, ColumnKind kind) {
  if (detail::trim(text).empty()) return Cell{};
  switch (kind) {
    case ColumnKind::number:
      if (auto v = detail::parse_double(text)) return Cell{*v};
      return std::nullopt;
    case ColumnKind::integer:
      if (auto v = detail::parse_int(text)) return Cell{*v};
      return std::nullopt;
    case ColumnKind::timestamp:
      if (auto v = detail::parse_timestamp(text)) return Cell{*v};
      return std::nullopt;
    case ColumnKind::boolean:
      if (auto v = detail::parse_bool(text)) return Cell{*v};
      return std::nullopt;
    case ColumnKind::category:
      return Cell{std::string(text)};
  }
  return std::nullopt;
}

inline std::string format_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return "";
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else if constexpr (std::is_same_v<T, std::string>) return v;
        else if constexpr (std::is_same_v<T, double>) {
          char buf[32];
          auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
          return std::string(buf, ptr);
        } else return std::to_string(v);
      },
      c);
}

/// Numeric reading of a number, integer or timestamp cell.
inline std::optional<double> numeric_value(const Cell& c) {
  if (auto d = std::get_if<double>(&c)) return *d;
  if (auto i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  return std::nullopt;
}

/// Binary reading: booleans as-is, numeric cells nonzero = true.
inline std::optional<bool> binary_value(const Cell& c) {
  if (auto b = std::get_if<bool>(&c)) return *b;
  if (auto v = numeric_value(c)) return *v != 0.0;
  return std::nullopt;
}

inline bool is_numeric_kind(ColumnKind k) {
  return k == ColumnKind::number || k == ColumnKind::integer || k == ColumnKind::timestamp;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

struct CsvRow {
  std::vector<std::string> fields;
  std::size_t line;  // 1-based physical line where the row starts
};

/// RFC-4180 reader: comma separated, double-quoted fields may contain commas,
/// line breaks and "" escapes. Accepts LF or CRLF. Blank lines are skipped.
inline std::vector<CsvRow> read_csv_rows(std::string_view text) {
  std::vector<CsvRow> rows;
  std::size_t i = 0, line = 1;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;  // UTF-8 BOM
  while (i < text.size()) {
    CsvRow row{{}, line};
    std::string field;
    bool row_done = false;
    bool any_content = false;
    while (!row_done) {
      field.clear();
      if (i < text.size() && text[i] == '"') {
        any_content = true;
        ++i;
        for (;;) {
          if (i >= text.size())
            throw IngestError("unterminated quoted field starting on line " +
                                  std::to_string(row.line),
                              row.line);
          char ch = text[i++];
          if (ch == '"') {
            if (i < text.size() && text[i] == '"') {
              field.push_back('"');
              ++i;
            } else {
              break;
            }
          } else {
            if (ch == '\n') ++line;
            field.push_back(ch);
          }
        }
        // only a separator or end of record may follow a closing quote
        while (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
          if (text[i] != ' ' && text[i] != '\t')
            throw IngestError("unexpected character after closing quote on line " +
                                  std::to_string(line),
                              line);
          ++i;
        }
      } else {
        while (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
          if (text[i] == '"')
            throw IngestError("stray quote in unquoted field on line " + std::to_string(line),
                              line);
          field.push_back(text[i++]);
        }
        if (!field.empty()) any_content = true;
      }
      row.fields.push_back(field);
      if (i >= text.size()) {
        row_done = true;
      } else if (text[i] == ',') {
        any_content = true;
        ++i;
      } else {
        if (text[i] == '\r') ++i;
        if (i < text.size() && text[i] == '\n') ++i;
        ++line;
        row_done = true;
      }
    }
    if (any_content) rows.push_back(std::move(row));
  }
  return rows;
}

inline ColumnKind infer_kind(const std::vector<CsvRow>& rows, std::size_t column) {
  bool any = false, all_number = true, all_bool = true;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    std::string_view f = trim(rows[r].fields[column]);
    if (f.empty()) continue;
    any = true;
    if (all_number && !parse_double(f)) all_number = false;
    if (all_bool && !parse_bool(f)) all_bool = false;
    if (!all_number && !all_bool) break;
  }
  if (!any) return ColumnKind::category;
  if (all_number) return ColumnKind::number;
  if (all_bool) return ColumnKind::boolean;
  return ColumnKind::category;
}

}  // namespace detail

/// Column-name to kind overrides. Unlisted columns are inferred: all-numeric
/// cells become number, all true/false become boolean, anything else category.
/// integer and timestamp are only ever chosen by a hint.
using SchemaHint = std::map<std::string, ColumnKind, std::less<>>;

inline Dataset ingest_csv_text(std::string name, std::string_view text,
                               const SchemaHint& hint = {}) {
  auto rows = detail::read_csv_rows(text);
  if (rows.empty()) throw IngestError("missing header row", 1);
  const auto& header = rows.front().fields;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].fields.size() != header.size())
      throw IngestError("line " + std::to_string(rows[r].line) + ": expected " +
                            std::to_string(header.size()) + " fields, found " +
                            std::to_string(rows[r].fields.size()),
                        rows[r].line);
  }

  Dataset ds;
  ds.name = std::move(name);
  for (std::size_t c = 0; c < header.size(); ++c) {
    std::string col(detail::trim(header[c]));
    if (col.empty()) throw IngestError("empty column name in header", rows.front().line);
    for (const auto& existing : ds.schema)
      if (existing.name == col)
        throw IngestError("duplicate column name '" + col + "'", rows.front().line, col);
    auto it = hint.find(col);
    ColumnKind kind = it != hint.end() ? it->second : detail::infer_kind(rows, c);
    ds.schema.push_back({std::move(col), kind});
  }
  for (const auto& [col, kind] : hint) {
    if (!ds.column_index(col))
      throw IngestError("schema hint names unknown column '" + col + "'", 0, col);
  }

  ds.rows.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    Record rec{static_cast<RowId>(r - 1), {}};
    rec.values.reserve(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
      auto cell = parse_cell(rows[r].fields[c], ds.schema[c].kind);
      if (!cell)
        throw IngestError("line " + std::to_string(rows[r].line) + ", column '" +
                              ds.schema[c].name + "': cannot parse '" + rows[r].fields[c] +
                              "' as " + std::string(to_string(ds.schema[c].kind)),
                          rows[r].line, ds.schema[c].name);
      rec.values.push_back(std::move(*cell));
    }
    ds.rows.push_back(std::move(rec));
  }
  return ds;
}

inline Dataset ingest_csv(const std::string& path, const SchemaHint& hint = {},
                          std::string name = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open '" + path + "'", 0);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (name.empty()) {
    auto slash = path.find_last_of('/');
    name = path.substr(slash == std::string::npos ? 0 : slash + 1);
    if (auto dot = name.rfind('.'); dot != std::string::npos && dot > 0) name.resize(dot);
  }
  return ingest_csv_text(std::move(name), buf.str(), hint);
}

namespace detail {
inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}
}  // namespace detail

inline void write_csv(std::ostream& out, const Dataset& ds) {
  for (std::size_t c = 0; c < ds.schema.size(); ++c)
    out << (c ? "," : "") << detail::csv_quote(ds.schema[c].name);
  out << '\n';
  for (const auto& rec : ds.rows) {
    for (std::size_t c = 0; c < rec.values.size(); ++c)
      out << (c ? "," : "") << detail::csv_quote(format_cell(rec.values[c]));
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Filters

enum class FilterOp { eq, neq, lt, lte, gt, gte, in_set, between };

inline std::string_view to_string(FilterOp op) {
  switch (op) {
    case FilterOp::eq: return "eq";
    case FilterOp::neq: return "neq";
    case FilterOp::lt: return "lt";
    case FilterOp::lte: return "lte";
    case FilterOp::gt: return "gt";
    case FilterOp::gte: return "gte";
    case FilterOp::in_set: return "in";
    case FilterOp::between: return "between";
  }
  return "?";
}

inline std::optional<FilterOp> filter_op_from_string(std::string_view s) {
  for (auto op : {FilterOp::eq, FilterOp::neq, FilterOp::lt, FilterOp::lte, FilterOp::gt,
                  FilterOp::gte, FilterOp::in_set, FilterOp::between})
    if (to_string(op) == s) return op;
  if (s == "in-set" || s == "in_set") return FilterOp::in_set;
  return std::nullopt;
}

/// between is inclusive on both ends. A missing cell never satisfies a predicate.
struct FilterPredicate {
  std::string column;
  FilterOp op = FilterOp::eq;
  std::vector<Cell> operands;
  bool operator==(const FilterPredicate&) const = default;
};

namespace detail {

inline bool cell_matches_kind(const Cell& c, ColumnKind kind) {
  switch (kind) {
    case ColumnKind::number: return std::holds_alternative<double>(c) || std::holds_alternative<std::int64_t>(c);
    case ColumnKind::integer:
    case ColumnKind::timestamp: return std::holds_alternative<std::int64_t>(c);
    case ColumnKind::category: return std::holds_alternative<std::string>(c);
    case ColumnKind::boolean: return std::holds_alternative<bool>(c);
  }
  return false;
}

// Three-way compare of two non-missing cells of the same column.
inline int compare_cells(const Cell& a, const Cell& b) {
  if (auto x = numeric_value(a)) {
    auto y = numeric_value(b);
    if (auto ia = std::get_if<std::int64_t>(&a))
      if (auto ib = std::get_if<std::int64_t>(&b)) return (*ia > *ib) - (*ia < *ib);
    return (*x > *y) - (*x < *y);
  }
  if (auto s = std::get_if<std::string>(&a)) {
    int r = s->compare(std::get<std::string>(b));
    return (r > 0) - (r < 0);
  }
  bool x = std::get<bool>(a), y = std::get<bool>(b);
  return (x > y) - (x < y);
}

}  // namespace detail

inline void validate_predicate(const Schema& schema, const FilterPredicate& p) {
  const Column* col = nullptr;
  for (const auto& c : schema)
    if (c.name == p.column) col = &c;
  if (!col) throw ValidationError("filter on unknown column '" + p.column + "'");
  const std::string where = "filter " + std::string(to_string(p.op)) + " on '" + p.column + "'";
  switch (p.op) {
    case FilterOp::eq:
    case FilterOp::neq:
    case FilterOp::lt:
    case FilterOp::lte:
    case FilterOp::gt:
    case FilterOp::gte:
      if (p.operands.size() != 1) throw ValidationError(where + ": expects exactly one operand");
      break;
    case FilterOp::between:
      if (p.operands.size() != 2) throw ValidationError(where + ": expects two operands");
      break;
    case FilterOp::in_set:
      if (p.operands.empty()) throw ValidationError(where + ": expects a nonempty set");
      break;
  }
  const bool ordering = p.op == FilterOp::lt || p.op == FilterOp::lte || p.op == FilterOp::gt ||
                        p.op == FilterOp::gte || p.op == FilterOp::between;
  if (ordering && !is_numeric_kind(col->kind))
    throw ValidationError(where + ": ordering comparison needs a numeric or timestamp column");
  for (const auto& v : p.operands)
    if (!detail::cell_matches_kind(v, col->kind))
      throw ValidationError(where + ": operand kind does not match column kind " +
                            std::string(to_string(col->kind)));
}

inline bool predicate_holds(const FilterPredicate& p, const Cell& v) {
  if (is_missing(v)) return false;
  auto cmp = [&](std::size_t i) { return detail::compare_cells(v, p.operands[i]); };
  switch (p.op) {
    case FilterOp::eq: return cmp(0) == 0;
    case FilterOp::neq: return cmp(0) != 0;
    case FilterOp::lt: return cmp(0) < 0;
    case FilterOp::lte: return cmp(0) <= 0;
    case FilterOp::gt: return cmp(0) > 0;
    case FilterOp::gte: return cmp(0) >= 0;
    case FilterOp::between: return cmp(0) >= 0 && cmp(1) <= 0;
    case FilterOp::in_set:
      for (std::size_t i = 0; i < p.operands.size(); ++i)
        if (cmp(i) == 0) return true;
      return false;
  }
  return false;
}

/// Immutable row-id snapshot of a dataset after filtering (the focused set d).
struct DatasetView {
  DatasetPtr source;
  std::vector<RowId> row_ids;
  std::vector<FilterPredicate> predicates;

  const Dataset& dataset() const { return *source; }
  std::size_t size() const { return row_ids.size(); }
};

inline DatasetView full_view(DatasetPtr ds) {
  DatasetView v{std::move(ds), {}, {}};
  v.row_ids.resize(v.source->row_count());
  for (std::size_t i = 0; i < v.row_ids.size(); ++i) v.row_ids[i] = i;
  return v;
}

/// Rows of `view` satisfying every predicate, in their original order.
inline DatasetView apply_filter(const DatasetView& view,
                                const std::vector<FilterPredicate>& predicates) {
  const Dataset& ds = view.dataset();
  std::vector<std::size_t> cols;
  for (const auto& p : predicates) {
    validate_predicate(ds.schema, p);
    cols.push_back(ds.require_column(p.column));
  }
  DatasetView out{view.source, {}, view.predicates};
  for (const auto& p : predicates)
    if (std::find(out.predicates.begin(), out.predicates.end(), p) == out.predicates.end())
      out.predicates.push_back(p);
  for (RowId id : view.row_ids) {
    const Record& rec = ds.row(id);
    bool keep = true;
    for (std::size_t k = 0; k < predicates.size() && keep; ++k)
      keep = predicate_holds(predicates[k], rec.values[cols[k]]);
    if (keep) out.row_ids.push_back(id);
  }
  return out;
}

inline DatasetView apply_filter(DatasetPtr ds, const std::vector<FilterPredicate>& predicates) {
  return apply_filter(full_view(std::move(ds)), predicates);
}

// ---------------------------------------------------------------------------
// Grouping

using GroupKey = std::vector<std::pair<std::string, Cell>>;

/// The rows behind one visual measure (m_i).
struct MeasureSubset {
  GroupKey group_key;
  std::vector<RowId> member_row_ids;
  std::vector<FilterPredicate> source_filter;
};

/// One subset per distinct key combination present in `view`, ordered by key
/// (missing first, then ascending). Rows missing a group column form their
/// own group so that the subsets always cover the whole view.
inline std::vector<MeasureSubset> group_measures(const DatasetView& view,
                                                 const std::vector<std::string>& group_by) {
  const Dataset& ds = view.dataset();
  std::vector<std::size_t> cols;
  for (const auto& name : group_by) {
    std::size_t c = ds.require_column(name);
    auto kind = ds.schema[c].kind;
    if (kind != ColumnKind::category && kind != ColumnKind::boolean && kind != ColumnKind::integer)
      throw ValidationError("cannot group by '" + name + "' of kind " +
                            std::string(to_string(kind)) +
                            "; grouping needs a category, boolean or integer column");
    cols.push_back(c);
  }
  std::vector<MeasureSubset> out;
  if (view.row_ids.empty()) return out;
  if (cols.empty()) {
    out.push_back({{}, view.row_ids, view.predicates});
    return out;
  }
  std::map<std::vector<Cell>, std::vector<RowId>> groups;
  for (RowId id : view.row_ids) {
    std::vector<Cell> key;
    key.reserve(cols.size());
    for (auto c : cols) key.push_back(ds.cell(id, c));
    groups[std::move(key)].push_back(id);
  }
  for (auto& [key, members] : groups) {
    MeasureSubset m;
    for (std::size_t k = 0; k < cols.size(); ++k) m.group_key.emplace_back(group_by[k], key[k]);
    m.member_row_ids = std::move(members);
    m.source_filter = view.predicates;
    out.push_back(std::move(m));
  }
  return out;
}

inline std::string group_label(const GroupKey& key) {
  if (key.empty()) return "all";
  std::string s;
  for (const auto& [col, v] : key) {
    if (!s.empty()) s += ", ";
    s += col + "=" + (is_missing(v) ? std::string("(missing)") : format_cell(v));
  }
  return s;
}

}  // namespace ir
