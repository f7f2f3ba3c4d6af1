#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace lexpred::corpus {

// The 11 section names a ruling document may carry, in canonical order.
inline constexpr std::array<std::string_view, 11> kSectionNames = {
    "Document Opener",    "Identity of Dependant", "Case History",
    "Detention History",  "Prosecution History",   "Indictment History",
    "Facts",              "Legal Facts",           "Legal Considerations",
    "Verdict",            "Closing",
};

// The sections used for prediction, in canonical order.
inline constexpr std::array<std::string_view, 4> kPredictiveSections = {
    "Prosecution History", "Facts", "Legal Facts", "Legal Considerations"};

bool is_section_name(std::string_view name);

struct CourtDocument {
    std::string id;
    std::map<std::string, std::string> sections;  // name -> verbatim text
    long long punishment_days = 0;

    bool operator==(const CourtDocument&) const = default;
};

// Strict parser for the repo's document schema:
//   <document id="..." punishment-days="N"> <section name="...">text</section>* </document>
// Malformed XML -> ParseError with line/column; unknown section name ->
// SchemaError; missing or negative duration -> LabelError.
CourtDocument parse_document(const std::string& xml_text);

// Inverse of parse_document; sections emitted in canonical order.
std::string serialize_document(const CourtDocument& doc);

// JSONL: {"id": ..., "punishment_days": ..., "sections": {name: text}}
CourtDocument parse_document_json(const std::string& json_line);
std::string serialize_document_json(const CourtDocument& doc);

std::vector<CourtDocument> load_corpus_jsonl(const std::string& path);
void save_corpus_jsonl(const std::vector<CourtDocument>& docs, const std::string& path);

// XML corpora are one document per file; `path` is a directory of .xml files
// (sorted by filename) or a single .xml file.
std::vector<CourtDocument> load_corpus_xml(const std::string& path);
void save_corpus_xml(const std::vector<CourtDocument>& docs, const std::string& dir);

std::vector<CourtDocument> load_corpus(const std::string& path, const std::string& format);

// The four predictive sections concatenated in canonical order, separated by
// single newlines; missing sections contribute empty segments.
std::string select_sections(const CourtDocument& doc);

// Keeps documents whose predictive text has any non-whitespace character and
// whose punishment_days > 0. Order-preserving, idempotent.
std::vector<CourtDocument> clean_corpus(const std::vector<CourtDocument>& docs);

double days_to_years(long long days, double days_per_year = 365.0);

}  // namespace lexpred::corpus
