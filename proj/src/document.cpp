#include "curate/document.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <unordered_set>

#include <json.hpp>

#include "curate/error.hpp"
#include "curate/text.hpp"

namespace curate {

namespace {

using json = nlohmann::json;

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

const json& require_string(const json& rec, const char* field) {
    const auto it = rec.find(field);
    if (it == rec.end() || it->is_null()) throw SchemaError(std::string("missing required field '") + field + "'");
    if (!it->is_string()) throw ParseError(std::string("field '") + field + "' must be a string");
    return *it;
}

std::optional<std::string> optional_string(const json& rec, const char* field) {
    const auto it = rec.find(field);
    if (it == rec.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ParseError(std::string("field '") + field + "' must be a string");
    return it->get<std::string>();
}

}  // namespace

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::Repository: return "repository";
        case Provenance::Web: return "web";
        case Provenance::Arxiv: return "arxiv";
        case Provenance::Books: return "books";
        case Provenance::WikiDump: return "wikidump";
        case Provenance::Synthetic: return "synthetic";
        case Provenance::Unknown: return "unknown";
    }
    return "unknown";
}

std::string_view to_string(DomainLabel d) {
    switch (d) {
        case DomainLabel::Web: return "web";
        case DomainLabel::Code: return "code";
        case DomainLabel::CodeNL: return "code_nl";
        case DomainLabel::Math: return "math";
        case DomainLabel::Wikipedia: return "wikipedia";
        case DomainLabel::Books: return "books";
        case DomainLabel::Multilingual: return "multilingual";
    }
    return "web";
}

Provenance parse_provenance(std::string_view s) {
    const auto v = lower(s);
    if (v == "repository" || v == "repo" || v == "github") return Provenance::Repository;
    if (v == "web") return Provenance::Web;
    if (v == "arxiv") return Provenance::Arxiv;
    if (v == "books" || v == "book") return Provenance::Books;
    if (v == "wikidump" || v == "wiki" || v == "wikipedia") return Provenance::WikiDump;
    if (v == "synthetic") return Provenance::Synthetic;
    if (v == "unknown") return Provenance::Unknown;
    throw ParseError("field 'provenance': unknown value '" + std::string(s) + "'");
}

DomainLabel parse_domain(std::string_view s) {
    const auto v = lower(s);
    for (auto d : kAllDomains)
        if (v == to_string(d)) return d;
    if (v == "code-nl" || v == "codenl") return DomainLabel::CodeNL;
    throw ParseError("field 'domain': unknown value '" + std::string(s) + "'");
}

Document parse_document_line(std::string_view line) {
    json rec;
    try {
        rec = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed record: ") + e.what());
    }
    if (!rec.is_object()) throw ParseError("record must be an object");

    Document doc;
    doc.id = require_string(rec, "id").get<std::string>();
    if (doc.id.empty()) throw SchemaError("field 'id' must be non-empty");
    doc.text = require_string(rec, "text").get<std::string>();
    if (auto p = optional_string(rec, "provenance")) doc.provenance = parse_provenance(*p);
    doc.language_hint = optional_string(rec, "language_hint");
    if (auto d = optional_string(rec, "domain")) doc.domain = parse_domain(*d);

    if (const auto it = rec.find("quality_score"); it != rec.end() && !it->is_null()) {
        if (!it->is_number()) throw ParseError("field 'quality_score' must be a number");
        const double q = it->get<double>();
        if (!(q >= 0.0 && q <= 1.0)) throw SchemaError("field 'quality_score' must lie in [0,1]");
        doc.quality_score = q;
    }
    if (auto l = optional_string(rec, "label")) {
        const auto v = lower(*l);
        if (v == "structured" || v == "positive" || v == "1")
            doc.structured = true;
        else if (v == "unstructured" || v == "negative" || v == "0")
            doc.structured = false;
        else
            throw ParseError("field 'label': unknown value '" + *l + "'");
    }
    return doc;
}

std::string serialize_document(const Document& doc) {
    // ordered_json keeps insertion order so output is stable field-by-field
    nlohmann::ordered_json rec;
    rec["id"] = doc.id;
    rec["text"] = doc.text;
    rec["provenance"] = std::string(to_string(doc.provenance));
    if (doc.language_hint) rec["language_hint"] = *doc.language_hint;
    if (doc.domain) rec["domain"] = std::string(to_string(*doc.domain));
    if (doc.quality_score) rec["quality_score"] = *doc.quality_score;
    if (doc.structured) rec["label"] = *doc.structured ? "structured" : "unstructured";
    return rec.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::strict);
}

std::size_t count_tokens(std::string_view text) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : text) {
        const bool space = text::is_space(c);
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

std::string write_report_line(const FilterReport& report) {
    std::string line = report.doc_id;
    line += '\t';
    line += report.decision == Decision::Keep ? "keep" : "discard";
    line += '\t';
    line += report.discard_reasons.empty() ? std::string("-") : text::join(report.discard_reasons, ";");
    return line;
}

CorpusReadResult read_documents(std::istream& in) {
    CorpusReadResult out;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::is_blank(line)) continue;
        try {
            auto doc = parse_document_line(line);
            if (!seen.insert(doc.id).second) throw SchemaError("duplicate id '" + doc.id + "'");
            out.documents.push_back(std::move(doc));
        } catch (const Error& e) {
            out.errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

CorpusReadResult read_documents_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open input file '" + path + "'");
    return read_documents(in);
}

}  // namespace curate
