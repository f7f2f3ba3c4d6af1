#include "lexpred/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lexpred/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lexpred::corpus {

bool is_section_name(std::string_view name) {
    return std::find(kSectionNames.begin(), kSectionNames.end(), name) != kSectionNames.end();
}

namespace {

// Minimal strict XML reader for the document schema. Supports a prolog,
// comments, attributes in single or double quotes, character data, and the
// five named entities plus numeric character references.
class XmlCursor {
public:
    explicit XmlCursor(const std::string& text) : text_(text) {}

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, line_, col_);
    }

    bool eof() const { return pos_ >= text_.size(); }
    char peek() const { return eof() ? '\0' : text_[pos_]; }

    char get() {
        if (eof()) fail("unexpected end of input");
        char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skip_ws() {
        while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) get();
    }

    bool consume(std::string_view lit) {
        if (text_.compare(pos_, lit.size(), lit) != 0) return false;
        for (size_t i = 0; i < lit.size(); ++i) get();
        return true;
    }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        get();
    }

    void skip_misc() {
        // prolog and comments between markup
        for (;;) {
            skip_ws();
            if (consume("<?")) {
                while (!consume("?>")) get();
            } else if (consume("<!--")) {
                while (!consume("-->")) get();
            } else {
                return;
            }
        }
    }

    std::string read_name() {
        std::string name;
        while (!eof()) {
            char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':') {
                name += get();
            } else {
                break;
            }
        }
        if (name.empty()) fail("expected a name");
        return name;
    }

    std::string read_entity() {
        // '&' already consumed
        std::string ent;
        while (peek() != ';') ent += get();
        get();  // ';'
        if (ent == "amp") return "&";
        if (ent == "lt") return "<";
        if (ent == "gt") return ">";
        if (ent == "quot") return "\"";
        if (ent == "apos") return "'";
        if (!ent.empty() && ent[0] == '#') {
            long code = 0;
            try {
                code = (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X'))
                           ? std::stol(ent.substr(2), nullptr, 16)
                           : std::stol(ent.substr(1));
            } catch (const std::exception&) {
                fail("bad character reference '&" + ent + ";'");
            }
            // encode as UTF-8
            std::string out;
            if (code < 0x80) {
                out += static_cast<char>(code);
            } else if (code < 0x800) {
                out += static_cast<char>(0xC0 | (code >> 6));
                out += static_cast<char>(0x80 | (code & 0x3F));
            } else if (code < 0x10000) {
                out += static_cast<char>(0xE0 | (code >> 12));
                out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
                out += static_cast<char>(0x80 | (code & 0x3F));
            } else {
                out += static_cast<char>(0xF0 | (code >> 18));
                out += static_cast<char>(0x80 | ((code >> 12) & 0x3F));
                out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
                out += static_cast<char>(0x80 | (code & 0x3F));
            }
            return out;
        }
        fail("unknown entity '&" + ent + ";'");
    }

    std::string read_attr_value() {
        char quote = peek();
        if (quote != '"' && quote != '\'') fail("expected quoted attribute value");
        get();
        std::string value;
        while (peek() != quote) {
            char c = get();
            if (c == '&') {
                value += read_entity();
            } else if (c == '<') {
                fail("'<' not allowed in attribute value");
            } else {
                value += c;
            }
        }
        get();
        return value;
    }

    std::map<std::string, std::string> read_attrs() {
        std::map<std::string, std::string> attrs;
        for (;;) {
            skip_ws();
            char c = peek();
            if (c == '>' || c == '/' || c == '\0') return attrs;
            std::string name = read_name();
            skip_ws();
            expect('=');
            skip_ws();
            if (!attrs.emplace(name, read_attr_value()).second) {
                fail("duplicate attribute '" + name + "'");
            }
        }
    }

    // Text content up to the next '<'; entities decoded.
    std::string read_text() {
        std::string text;
        while (!eof() && peek() != '<') {
            char c = get();
            text += (c == '&') ? read_entity() : std::string(1, c);
        }
        return text;
    }

private:
    const std::string& text_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

std::string escape_xml(const std::string& s, bool attr) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += attr ? "&quot;" : "\""; break;
            default: out += c;
        }
    }
    return out;
}

long long parse_days_attr(const std::map<std::string, std::string>& attrs) {
    auto it = attrs.find("punishment-days");
    if (it == attrs.end()) {
        throw LabelError("document is missing the punishment-days attribute");
    }
    const std::string& v = it->second;
    if (v.empty() || v.find_first_not_of("0123456789-") != std::string::npos) {
        throw LabelError("punishment-days is not an integer: '" + v + "'");
    }
    long long days = 0;
    try {
        days = std::stoll(v);
    } catch (const std::exception&) {
        throw LabelError("punishment-days is not an integer: '" + v + "'");
    }
    if (days < 0) {
        throw LabelError("punishment-days must be non-negative, got " + v);
    }
    return days;
}

}  // namespace

CourtDocument parse_document(const std::string& xml_text) {
    XmlCursor in(xml_text);
    in.skip_misc();
    if (!in.consume("<")) in.fail("expected root element");
    if (in.read_name() != "document") in.fail("root element must be <document>");
    auto attrs = in.read_attrs();

    CourtDocument doc;
    auto id_it = attrs.find("id");
    if (id_it == attrs.end()) throw SchemaError("document is missing the id attribute");
    doc.id = id_it->second;
    doc.punishment_days = parse_days_attr(attrs);

    in.skip_ws();
    in.expect('>');
    for (;;) {
        in.skip_misc();
        if (!in.consume("<")) in.fail("expected markup");
        if (in.consume("/")) {
            if (in.read_name() != "document") in.fail("mismatched closing tag");
            in.skip_ws();
            in.expect('>');
            break;
        }
        std::string elem = in.read_name();
        if (elem != "section") in.fail("unexpected element <" + elem + ">");
        auto sattrs = in.read_attrs();
        auto name_it = sattrs.find("name");
        if (name_it == sattrs.end()) throw SchemaError("section is missing the name attribute");
        const std::string& name = name_it->second;
        if (!is_section_name(name)) {
            throw SchemaError("unknown section name '" + name + "'");
        }
        in.skip_ws();
        std::string text;
        if (in.consume("/>")) {
            // empty section
        } else {
            in.expect('>');
            text = in.read_text();
            if (!in.consume("</")) in.fail("expected closing tag");
            if (in.read_name() != "section") in.fail("mismatched closing tag");
            in.skip_ws();
            in.expect('>');
        }
        if (!doc.sections.emplace(name, text).second) {
            throw SchemaError("duplicate section '" + name + "'");
        }
    }
    in.skip_misc();
    if (!in.eof()) in.fail("trailing content after </document>");
    return doc;
}

std::string serialize_document(const CourtDocument& doc) {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<document id=\"" << escape_xml(doc.id, true) << "\" punishment-days=\""
        << doc.punishment_days << "\">\n";
    for (std::string_view name : kSectionNames) {
        auto it = doc.sections.find(std::string(name));
        if (it == doc.sections.end()) continue;
        out << "  <section name=\"" << escape_xml(it->first, true) << "\">"
            << escape_xml(it->second, false) << "</section>\n";
    }
    out << "</document>\n";
    return out.str();
}

CourtDocument parse_document_json(const std::string& json_line) {
    json j;
    try {
        j = json::parse(json_line);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("bad JSON: ") + e.what(), 1, static_cast<int>(e.byte));
    }
    CourtDocument doc;
    if (!j.contains("id") || !j["id"].is_string()) throw SchemaError("JSONL document needs a string id");
    doc.id = j["id"].get<std::string>();
    if (!j.contains("punishment_days") || !j["punishment_days"].is_number_integer()) {
        throw LabelError("JSONL document '" + doc.id + "' needs an integer punishment_days");
    }
    doc.punishment_days = j["punishment_days"].get<long long>();
    if (doc.punishment_days < 0) {
        throw LabelError("punishment_days must be non-negative in document '" + doc.id + "'");
    }
    if (j.contains("sections")) {
        for (auto& [name, text] : j["sections"].items()) {
            if (!is_section_name(name)) {
                throw SchemaError("unknown section name '" + name + "' in document '" + doc.id + "'");
            }
            doc.sections[name] = text.get<std::string>();
        }
    }
    return doc;
}

std::string serialize_document_json(const CourtDocument& doc) {
    json j;
    j["id"] = doc.id;
    j["punishment_days"] = doc.punishment_days;
    j["sections"] = json::object();
    for (const auto& [name, text] : doc.sections) j["sections"][name] = text;
    return j.dump();
}

std::vector<CourtDocument> load_corpus_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open corpus file: " + path);
    std::vector<CourtDocument> docs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        docs.push_back(parse_document_json(line));
    }
    return docs;
}

void save_corpus_jsonl(const std::vector<CourtDocument>& docs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write corpus file: " + path);
    for (const auto& doc : docs) out << serialize_document_json(doc) << "\n";
}

std::vector<CourtDocument> load_corpus_xml(const std::string& path) {
    std::vector<std::string> files;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.path().extension() == ".xml") files.push_back(entry.path().string());
        }
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(path);
    }
    std::vector<CourtDocument> docs;
    for (const auto& file : files) {
        std::ifstream in(file);
        if (!in) throw ValidationError("cannot open XML file: " + file);
        std::stringstream buf;
        buf << in.rdbuf();
        docs.push_back(parse_document(buf.str()));
    }
    return docs;
}

void save_corpus_xml(const std::vector<CourtDocument>& docs, const std::string& dir) {
    fs::create_directories(dir);
    size_t width = std::to_string(docs.size()).size();
    for (size_t i = 0; i < docs.size(); ++i) {
        std::string num = std::to_string(i);
        std::string name = "doc_" + std::string(width - num.size(), '0') + num + ".xml";
        std::ofstream out(fs::path(dir) / name);
        out << serialize_document(docs[i]);
    }
}

std::vector<CourtDocument> load_corpus(const std::string& path, const std::string& format) {
    if (format == "jsonl") return load_corpus_jsonl(path);
    if (format == "xml") return load_corpus_xml(path);
    throw UsageError("unknown corpus format '" + format + "' (expected xml or jsonl)");
}

std::string select_sections(const CourtDocument& doc) {
    std::string out;
    for (size_t i = 0; i < kPredictiveSections.size(); ++i) {
        if (i > 0) out += '\n';
        auto it = doc.sections.find(std::string(kPredictiveSections[i]));
        if (it != doc.sections.end()) out += it->second;
    }
    return out;
}

std::vector<CourtDocument> clean_corpus(const std::vector<CourtDocument>& docs) {
    std::vector<CourtDocument> kept;
    kept.reserve(docs.size());
    for (const auto& doc : docs) {
        if (doc.punishment_days <= 0) continue;
        std::string text = select_sections(doc);
        bool has_content = std::any_of(text.begin(), text.end(), [](unsigned char c) {
            return !std::isspace(c);
        });
        if (has_content) kept.push_back(doc);
    }
    return kept;
}

double days_to_years(long long days, double days_per_year) {
    return static_cast<double>(days) / days_per_year;
}

}  // namespace lexpred::corpus
