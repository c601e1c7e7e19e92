/*
 * Copyright 2026 The portshare Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "portshare/conn_ingest.hpp"

#include <array>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "portshare/errors.hpp"
#include "portshare/text.hpp"

namespace portshare {

namespace {

enum Field : int {
    kTs, kUid, kOrigH, kOrigP, kRespH, kRespP, kProto, kDuration,
    kOrigBytes, kRespBytes, kConnState, kOrigPkts, kRespPkts, kNumFields
};

constexpr std::array<std::string_view, kNumFields> kFieldNames = {
    "ts", "uid", "id.orig_h", "id.orig_p", "id.resp_h", "id.resp_p", "proto", "duration",
    "orig_bytes", "resp_bytes", "conn_state", "orig_pkts", "resp_pkts"};

constexpr std::array<std::string_view, kNumFields> kFieldTypes = {
    "time", "string", "addr", "port", "addr", "port", "enum", "interval",
    "count", "count", "string", "count", "count"};

// Column layout of a stock Zeek conn.log, used when a TSV stream has no #fields line.
constexpr std::array<std::string_view, 21> kDefaultZeekColumns = {
    "ts", "uid", "id.orig_h", "id.orig_p", "id.resp_h", "id.resp_p", "proto", "service",
    "duration", "orig_bytes", "resp_bytes", "conn_state", "local_orig", "local_resp",
    "missed_bytes", "history", "orig_pkts", "orig_ip_bytes", "resp_pkts", "resp_ip_bytes",
    "tunnel_parents"};

std::optional<std::uint16_t> parse_port(std::string_view s)
{
    auto v = text::parse_uint(s);
    if (!v || *v > 65535) return std::nullopt;
    return static_cast<std::uint16_t>(*v);
}

bool valid_duration(double d) { return std::isfinite(d) && d >= 0.0; }

std::vector<int> default_columns()
{
    std::vector<int> cols(kNumFields, -1);
    for (int c = 0; c < static_cast<int>(kDefaultZeekColumns.size()); ++c) {
        for (int f = 0; f < kNumFields; ++f) {
            if (kFieldNames[f] == kDefaultZeekColumns[c]) cols[f] = c;
        }
    }
    return cols;
}

}  // namespace

LogFormat parse_log_format(std::string_view name)
{
    if (name == "auto") return LogFormat::automatic;
    if (name == "tsv") return LogFormat::tsv;
    if (name == "jsonl") return LogFormat::jsonl;
    throw ConfigError("unknown log format: " + std::string(name));
}

ConnLogReader::ConnLogReader(std::istream& in, LogFormat format) : in_(in), format_(format)
{
    if (!in_.good() && !in_.eof()) throw IoError("conn log stream is not readable");
    column_of_ = default_columns();
    if (format_ != LogFormat::automatic) detected_ = true;
}

bool ConnLogReader::detect_format()
{
    std::string line;
    while (std::getline(in_, line)) {
        ++line_no_;
        auto t = text::trim(line);
        if (t.empty()) continue;
        if (t.front() == '#') {
            format_ = LogFormat::tsv;
        } else if (t.front() == '{') {
            format_ = LogFormat::jsonl;
        } else {
            throw ConfigError("cannot detect conn log format from line " + std::to_string(line_no_));
        }
        pending_ = std::move(line);
        has_pending_ = true;
        detected_ = true;
        return true;
    }
    if (in_.bad()) throw IoError("read error on conn log stream");
    return false;
}

void ConnLogReader::read_header(const std::string& line)
{
    std::string_view l = line;
    if (l.starts_with("#separator")) {
        auto rest = text::trim(l.substr(10));
        if (rest.starts_with("\\x") && rest.size() >= 4) {
            separator_ = static_cast<char>(std::stoi(std::string(rest.substr(2, 2)), nullptr, 16));
        } else if (!rest.empty()) {
            separator_ = rest.front();
        }
        return;
    }
    auto parts = text::split(l, separator_);
    if (parts.empty()) return;
    if (parts[0] == "#unset_field" && parts.size() > 1) {
        unset_field_ = std::string(parts[1]);
    } else if (parts[0] == "#empty_field" && parts.size() > 1) {
        empty_field_ = std::string(parts[1]);
    } else if (parts[0] == "#fields") {
        column_of_.assign(kNumFields, -1);
        for (std::size_t c = 1; c < parts.size(); ++c) {
            for (int f = 0; f < kNumFields; ++f) {
                if (kFieldNames[f] == parts[c]) column_of_[f] = static_cast<int>(c - 1);
            }
        }
    }
}

std::optional<ConnRecord> ConnLogReader::parse_tsv(const std::string& line)
{
    auto cols = text::split(line, separator_);
    auto col = [&](int f) -> std::optional<std::string_view> {
        const int c = column_of_[f];
        if (c < 0 || c >= static_cast<int>(cols.size())) return std::nullopt;
        return cols[static_cast<std::size_t>(c)];
    };
    for (int f : {kTs, kOrigH, kOrigP, kRespH, kRespP, kProto, kConnState}) {
        if (!col(f) || *col(f) == unset_field_) return std::nullopt;
    }

    ConnRecord r;
    auto ts = text::parse_double(*col(kTs));
    if (!ts || !std::isfinite(*ts)) return std::nullopt;
    r.ts = *ts;
    if (auto uid = col(kUid); uid && *uid != unset_field_ && *uid != empty_field_) {
        r.uid = std::string(*uid);
    }
    r.orig_ip = std::string(*col(kOrigH));
    r.resp_ip = std::string(*col(kRespH));
    auto op = parse_port(*col(kOrigP));
    auto rp = parse_port(*col(kRespP));
    auto proto = parse_proto(*col(kProto));
    auto state = parse_conn_state(*col(kConnState));
    if (!op || !rp || !proto || !state) return std::nullopt;
    r.orig_port = *op;
    r.resp_port = *rp;
    r.proto = *proto;
    r.conn_state = *state;

    if (auto d = col(kDuration); d && *d != unset_field_) {
        auto v = text::parse_double(*d);
        if (!v || !valid_duration(*v)) return std::nullopt;
        r.duration = *v;
    }
    auto counter = [&](int f, std::optional<std::uint64_t>& out) {
        auto c = col(f);
        if (!c || *c == unset_field_) return true;
        auto v = text::parse_uint(*c);
        if (!v) return false;
        out = *v;
        return true;
    };
    if (!counter(kOrigBytes, r.orig_bytes) || !counter(kRespBytes, r.resp_bytes) ||
        !counter(kOrigPkts, r.orig_pkts) || !counter(kRespPkts, r.resp_pkts)) {
        return std::nullopt;
    }
    return r;
}

std::optional<ConnRecord> ConnLogReader::parse_jsonl(const std::string& line)
{
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;

    auto str = [&](std::string_view key) -> std::optional<std::string> {
        auto it = j.find(key);
        if (it == j.end() || !it->is_string()) return std::nullopt;
        return it->get<std::string>();
    };
    auto uint_field = [&](std::string_view key, std::optional<std::uint64_t>& out) {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) return true;
        if (!it->is_number_integer() || (it->is_number_integer() && !it->is_number_unsigned() &&
                                         it->get<std::int64_t>() < 0)) {
            return false;
        }
        out = it->get<std::uint64_t>();
        return true;
    };

    ConnRecord r;
    auto ts = j.find("ts");
    if (ts == j.end() || !ts->is_number()) return std::nullopt;
    r.ts = ts->get<double>();
    if (!std::isfinite(r.ts)) return std::nullopt;
    r.uid = str("uid").value_or("");
    auto oh = str("id.orig_h");
    auto rh = str("id.resp_h");
    auto proto = str("proto");
    auto state = str("conn_state");
    if (!oh || !rh || !proto || !state) return std::nullopt;
    r.orig_ip = *oh;
    r.resp_ip = *rh;
    auto p = parse_proto(*proto);
    auto s = parse_conn_state(*state);
    if (!p || !s) return std::nullopt;
    r.proto = *p;
    r.conn_state = *s;

    std::optional<std::uint64_t> op, rp;
    if (!uint_field("id.orig_p", op) || !uint_field("id.resp_p", rp) || !op || !rp) return std::nullopt;
    if (*op > 65535 || *rp > 65535) return std::nullopt;
    r.orig_port = static_cast<std::uint16_t>(*op);
    r.resp_port = static_cast<std::uint16_t>(*rp);

    if (auto d = j.find("duration"); d != j.end() && !d->is_null()) {
        if (!d->is_number()) return std::nullopt;
        double v = d->get<double>();
        if (!valid_duration(v)) return std::nullopt;
        r.duration = v;
    }
    if (!uint_field("orig_bytes", r.orig_bytes) || !uint_field("resp_bytes", r.resp_bytes) ||
        !uint_field("orig_pkts", r.orig_pkts) || !uint_field("resp_pkts", r.resp_pkts)) {
        return std::nullopt;
    }
    return r;
}

std::optional<ConnRecord> ConnLogReader::next()
{
    if (!detected_ && !detect_format()) return std::nullopt;

    std::string line;
    while (true) {
        if (has_pending_) {
            line = std::move(pending_);
            has_pending_ = false;
        } else {
            if (!std::getline(in_, line)) {
                if (in_.bad()) throw IoError("read error on conn log stream");
                return std::nullopt;
            }
            ++line_no_;
        }
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;

        if (format_ == LogFormat::tsv) {
            if (line.front() == '#') {
                read_header(line);
                continue;
            }
            if (auto r = parse_tsv(line)) return r;
        } else {
            if (auto r = parse_jsonl(line)) return r;
        }
        ++skipped_;
    }
}

ParsedLog read_conn_log(std::istream& in, LogFormat format)
{
    ConnLogReader reader(in, format);
    ParsedLog out;
    while (auto r = reader.next()) out.records.push_back(std::move(*r));
    out.skipped = reader.skipped();
    return out;
}

ParsedLog read_conn_log_file(const std::string& path, LogFormat format)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open conn log: " + path);
    return read_conn_log(in, format);
}

void write_conn_log_tsv(std::ostream& out, std::span<const ConnRecord> records)
{
    out << "#separator \\x09\n#set_separator\t,\n#empty_field\t(empty)\n#unset_field\t-\n#path\tconn\n";
    out << "#fields";
    for (auto n : kFieldNames) out << '\t' << n;
    out << "\n#types";
    for (auto t : kFieldTypes) out << '\t' << t;
    out << '\n';

    auto opt_u = [](const std::optional<std::uint64_t>& v) {
        return v ? std::to_string(*v) : std::string("-");
    };
    std::string row;
    for (const auto& r : records) {
        row.clear();
        row += text::format_double(r.ts);
        row += '\t';
        row += r.uid.empty() ? std::string("(empty)") : r.uid;
        row += '\t';
        row += r.orig_ip;
        row += '\t';
        row += std::to_string(r.orig_port);
        row += '\t';
        row += r.resp_ip;
        row += '\t';
        row += std::to_string(r.resp_port);
        row += '\t';
        row += to_string(r.proto);
        row += '\t';
        row += r.duration ? text::format_double(*r.duration) : std::string("-");
        row += '\t';
        row += opt_u(r.orig_bytes);
        row += '\t';
        row += opt_u(r.resp_bytes);
        row += '\t';
        row += to_string(r.conn_state);
        row += '\t';
        row += opt_u(r.orig_pkts);
        row += '\t';
        row += opt_u(r.resp_pkts);
        row += '\n';
        out << row;
    }
    if (!out) throw IoError("write error on conn log stream");
}

void write_conn_log_tsv_file(const std::string& path, std::span<const ConnRecord> records)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write conn log: " + path);
    write_conn_log_tsv(out, records);
}

void write_conn_log_jsonl(std::ostream& out, std::span<const ConnRecord> records)
{
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["ts"] = r.ts;
        j["uid"] = r.uid;
        j["id.orig_h"] = r.orig_ip;
        j["id.orig_p"] = r.orig_port;
        j["id.resp_h"] = r.resp_ip;
        j["id.resp_p"] = r.resp_port;
        j["proto"] = std::string(to_string(r.proto));
        if (r.duration) j["duration"] = *r.duration;
        if (r.orig_bytes) j["orig_bytes"] = *r.orig_bytes;
        if (r.resp_bytes) j["resp_bytes"] = *r.resp_bytes;
        j["conn_state"] = std::string(to_string(r.conn_state));
        if (r.orig_pkts) j["orig_pkts"] = *r.orig_pkts;
        if (r.resp_pkts) j["resp_pkts"] = *r.resp_pkts;
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("write error on conn log stream");
}

}  // namespace portshare
