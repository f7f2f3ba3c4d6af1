#include "lexpred/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lexpred/config.hpp"
#include "lexpred/errors.hpp"
#include "lexpred/textnorm.hpp"

using nlohmann::json;

namespace lexpred::corpus {

void SyntheticSpec::validate() const {
    if (n_docs == 0) throw ValidationError("synthetic spec: n_docs must be positive");
    if (vocab_size == 0) throw ValidationError("synthetic spec: vocab_size must be positive");
    if (base_days < 0) throw ValidationError("synthetic spec: base_days must be non-negative");
    if (noise_std_days < 0) throw ValidationError("synthetic spec: noise_std_days must be non-negative");
    if (typo_rate < 0.0 || typo_rate > 1.0) {
        throw ValidationError("synthetic spec: typo_rate must lie in [0,1]");
    }
    if (merge_rate < 0.0 || merge_rate > 1.0) {
        throw ValidationError("synthetic spec: merge_rate must lie in [0,1]");
    }
    if (blank_count > n_docs) throw ValidationError("synthetic spec: blank_count exceeds n_docs");
    if (vocab_size < signal_tokens.size()) {
        throw ValidationError("synthetic spec: vocab_size smaller than the signal token count");
    }
    for (const auto& [token, weight] : signal_tokens) {
        if (token.empty()) throw ValidationError("synthetic spec: empty signal token");
        if (weight < 0) throw ValidationError("synthetic spec: negative signal weight for '" + token + "'");
        for (char c : token) {
            if (c < 'a' || c > 'z') {
                throw ValidationError("synthetic spec: signal token '" + token +
                                      "' must be lowercase a-z");
            }
        }
    }
    for (size_t i = 0; i < signal_tokens.size(); ++i) {
        for (size_t j = i + 1; j < signal_tokens.size(); ++j) {
            int d = textnorm::edit_distance(signal_tokens[i].first, signal_tokens[j].first);
            if (d < 5) {
                throw ValidationError("synthetic spec: signal tokens '" + signal_tokens[i].first +
                                      "' and '" + signal_tokens[j].first +
                                      "' are at edit distance " + std::to_string(d) + " (< 5)");
            }
        }
    }
}

size_t CorruptionLog::count(CorruptionEntry::Kind kind) const {
    return static_cast<size_t>(std::count_if(entries.begin(), entries.end(), [&](const auto& e) {
        return e.kind == kind;
    }));
}

void CorruptionLog::save_jsonl(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write corruption log: " + path);
    for (const auto& e : entries) {
        json j;
        j["doc_id"] = e.doc_id;
        j["position"] = e.position;
        j["kind"] = e.kind == CorruptionEntry::Kind::typo ? "typo" : "merge";
        j["original"] = e.original;
        j["corrupted"] = e.corrupted;
        out << j.dump() << "\n";
    }
}

CorruptionLog CorruptionLog::load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open corruption log: " + path);
    CorruptionLog log;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        CorruptionEntry e;
        e.doc_id = j.at("doc_id").get<std::string>();
        e.position = j.at("position").get<size_t>();
        e.kind = j.at("kind").get<std::string>() == "typo" ? CorruptionEntry::Kind::typo
                                                           : CorruptionEntry::Kind::merge;
        e.original = j.at("original").get<std::vector<std::string>>();
        e.corrupted = j.at("corrupted").get<std::string>();
        log.entries.push_back(std::move(e));
    }
    return log;
}

namespace {

bool all_alpha(const std::string& t) {
    return !t.empty() && std::all_of(t.begin(), t.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

std::string apply_typo(const std::string& token, Rng& rng) {
    for (;;) {
        std::string out = token;
        switch (rng.below(3)) {
            case 0: {  // substitute
                size_t pos = rng.below(out.size());
                char c = static_cast<char>('a' + rng.below(26));
                if (c == out[pos]) c = (c == 'z') ? 'a' : static_cast<char>(c + 1);
                out[pos] = c;
                break;
            }
            case 1: {  // insert
                size_t pos = rng.below(out.size() + 1);
                out.insert(out.begin() + pos, static_cast<char>('a' + rng.below(26)));
                break;
            }
            default: {  // delete
                if (out.size() < 2) continue;
                out.erase(out.begin() + rng.below(out.size()));
                break;
            }
        }
        if (out != token) return out;
    }
}

// Pseudo-legal filler words, pairwise at edit distance >= 5 from each other
// and from the signal tokens.
std::vector<std::string> build_wordlist(const SyntheticSpec& spec, Rng& rng) {
    std::vector<std::string> words;
    words.reserve(spec.vocab_size);
    for (const auto& [token, weight] : spec.signal_tokens) {
        (void)weight;
        words.push_back(token);
    }
    size_t attempts = 0;
    while (words.size() < spec.vocab_size) {
        if (++attempts > spec.vocab_size * 1000) {
            throw ValidationError("synthetic spec: could not build a pairwise-distant vocabulary of " +
                                  std::to_string(spec.vocab_size) + " words");
        }
        size_t len = 6 + rng.below(5);  // 6..10
        std::string w;
        for (size_t i = 0; i < len; ++i) w += static_cast<char>('a' + rng.below(26));
        bool ok = true;
        for (const auto& existing : words) {
            if (textnorm::bounded_edit_distance(w, existing, 4)) {
                ok = false;
                break;
            }
        }
        if (ok) words.push_back(std::move(w));
    }
    return words;
}

}  // namespace

CorruptionPass corrupt_tokens(const std::vector<std::string>& tokens,
                              const std::vector<size_t>& section_of,
                              double typo_rate, double merge_rate,
                              Rng& rng, const std::string& doc_id) {
    if (!section_of.empty() && section_of.size() != tokens.size()) {
        throw ValidationError("corrupt_tokens: section map length mismatch");
    }
    auto section = [&](size_t i) { return section_of.empty() ? size_t(0) : section_of[i]; };

    CorruptionPass out;
    out.tokens.reserve(tokens.size());
    size_t i = 0;
    while (i < tokens.size()) {
        const std::string& tok = tokens[i];
        bool can_merge = i + 1 < tokens.size() && all_alpha(tok) && all_alpha(tokens[i + 1]) &&
                         section(i) == section(i + 1);
        if (can_merge && rng.next_double() < merge_rate) {
            CorruptionEntry e;
            e.doc_id = doc_id;
            e.position = out.tokens.size();
            e.kind = CorruptionEntry::Kind::merge;
            e.original = {tok, tokens[i + 1]};
            e.corrupted = tok + tokens[i + 1];
            out.tokens.push_back(e.corrupted);
            out.section_of.push_back(section(i));
            out.entries.push_back(std::move(e));
            i += 2;
            continue;
        }
        if (all_alpha(tok) && rng.next_double() < typo_rate) {
            CorruptionEntry e;
            e.doc_id = doc_id;
            e.position = out.tokens.size();
            e.kind = CorruptionEntry::Kind::typo;
            e.original = {tok};
            e.corrupted = apply_typo(tok, rng);
            out.tokens.push_back(e.corrupted);
            out.section_of.push_back(section(i));
            out.entries.push_back(std::move(e));
            ++i;
            continue;
        }
        out.tokens.push_back(tok);
        out.section_of.push_back(section(i));
        ++i;
    }
    return out;
}

namespace {

// Chunk a section's tokens into 6..12-token sentences terminated by '. '.
std::string emit_section_text(const std::vector<std::string>& tokens, size_t begin, size_t end,
                              Rng& rng) {
    std::string text;
    size_t i = begin;
    while (i < end) {
        size_t len = std::min(end - i, 6 + rng.below(7));
        for (size_t k = 0; k < len; ++k) {
            if (k > 0) text += ' ';
            text += tokens[i + k];
        }
        text += '.';
        i += len;
        if (i < end) text += ' ';
    }
    return text;
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    SyntheticCorpus result;
    result.planted_vocabulary = build_wordlist(spec, rng);
    const size_t n_signal = spec.signal_tokens.size();
    const size_t n_filler = result.planted_vocabulary.size() - n_signal;
    if (n_filler == 0) throw ValidationError("synthetic spec: vocab_size leaves no filler words");

    // Zipf-ish filler distribution so the vocabulary cutoff sweep has a
    // meaningful frequency spectrum.
    std::vector<double> cumulative(n_filler);
    double total = 0.0;
    for (size_t r = 0; r < n_filler; ++r) {
        total += 1.0 / static_cast<double>(r + 1);
        cumulative[r] = total;
    }

    auto draw_filler = [&]() -> const std::string& {
        double u = rng.next_double() * total;
        size_t idx = static_cast<size_t>(
            std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        if (idx >= n_filler) idx = n_filler - 1;
        return result.planted_vocabulary[n_signal + idx];
    };

    std::vector<size_t> blank_picks(spec.n_docs);
    for (size_t i = 0; i < spec.n_docs; ++i) blank_picks[i] = i;
    rng.shuffle(blank_picks);
    std::set<size_t> blanked(blank_picks.begin(), blank_picks.begin() + spec.blank_count);

    const size_t id_width = std::to_string(spec.n_docs).size();

    for (size_t d = 0; d < spec.n_docs; ++d) {
        CourtDocument doc;
        std::string num = std::to_string(d);
        doc.id = "doc-" + std::string(id_width - num.size(), '0') + num;

        // Signal counts drive the label; the tokens are then shuffled into
        // the filler stream.
        std::vector<std::string> stream;
        double signal_days = 0.0;
        for (const auto& [token, weight] : spec.signal_tokens) {
            size_t count = rng.below(9);  // 0..8 occurrences
            signal_days += weight * static_cast<double>(count);
            for (size_t k = 0; k < count; ++k) stream.push_back(token);
        }
        size_t target_len = 80 + rng.below(61);  // 80..140 tokens
        while (stream.size() < target_len) stream.push_back(draw_filler());
        // A sprinkle of numerals: one frequent year plus a rare case number.
        stream.push_back("2020");
        if (rng.next_double() < 0.05) {
            stream.push_back(std::to_string(100000 + rng.below(900000)));
        }
        rng.shuffle(stream);

        double noise = spec.noise_std_days > 0 ? rng.normal(0.0, spec.noise_std_days) : 0.0;
        double raw_days = static_cast<double>(spec.base_days) + signal_days + noise;
        doc.punishment_days = std::max<long long>(1, std::llround(raw_days));

        // Contiguous split of the stream over the four predictive sections,
        // so the concatenated stream equals the document's token stream.
        std::vector<size_t> section_of(stream.size());
        std::array<size_t, 4> cuts{};
        cuts[0] = stream.size() / 4 + rng.below(stream.size() / 8 + 1);
        cuts[1] = cuts[0] + stream.size() / 4;
        cuts[2] = cuts[1] + stream.size() / 8 + rng.below(stream.size() / 8 + 1);
        cuts[3] = stream.size();
        for (size_t i = 0, s = 0; i < stream.size(); ++i) {
            while (s < 3 && i >= cuts[s]) ++s;
            section_of[i] = s;
        }

        CorruptionPass pass =
            corrupt_tokens(stream, section_of, spec.typo_rate, spec.merge_rate, rng, doc.id);

        std::array<size_t, 4> begins{}, ends{};
        for (size_t s = 0; s < 4; ++s) {
            begins[s] = pass.tokens.size();
            ends[s] = 0;
        }
        for (size_t i = 0; i < pass.tokens.size(); ++i) {
            size_t s = pass.section_of[i];
            begins[s] = std::min(begins[s], i);
            ends[s] = std::max(ends[s], i + 1);
        }
        for (size_t s = 0; s < 4; ++s) {
            std::string name(kPredictiveSections[s]);
            doc.sections[name] = (ends[s] > begins[s])
                                     ? emit_section_text(pass.tokens, begins[s], ends[s], rng)
                                     : "";
        }
        doc.sections["Document Opener"] = "putusan perkara " + doc.id;
        doc.sections["Identity of Dependant"] = "terdakwa dalam perkara " + doc.id;
        doc.sections["Case History"] = "riwayat perkara tercatat.";
        doc.sections["Detention History"] = "riwayat penahanan tercatat.";
        doc.sections["Indictment History"] = "riwayat dakwaan tercatat.";
        doc.sections["Verdict"] =
            "menjatuhkan pidana selama " + std::to_string(doc.punishment_days) + " hari.";
        doc.sections["Closing"] = "demikian putusan ini.";

        if (blanked.count(d)) {
            for (auto name : kPredictiveSections) doc.sections[std::string(name)] = "";
            result.blanked_ids.push_back(doc.id);
        } else {
            for (auto& e : pass.entries) result.log.entries.push_back(std::move(e));
        }
        result.docs.push_back(std::move(doc));
    }
    return result;
}

SyntheticSpec parse_synthetic_spec_file(const std::string& path) {
    Config cfg = Config::parse_file(path);
    SyntheticSpec spec;
    spec.n_docs = static_cast<size_t>(cfg.get_int("n_docs"));
    spec.base_days = cfg.get_int("base_days", 100);
    spec.noise_std_days = cfg.get_real("noise_std_days", 0.0);
    spec.typo_rate = cfg.get_real_in("typo_rate", 0.0, 0.0, 1.0, true, true, "[0,1]");
    spec.merge_rate = cfg.get_real_in("merge_rate", 0.0, 0.0, 1.0, true, true, "[0,1]");
    spec.seed = cfg.get_seed("seed", 42);
    spec.vocab_size = static_cast<size_t>(cfg.get_int("vocab_size", 120));
    spec.blank_count = static_cast<size_t>(cfg.get_int("blank_count", 0));
    // signal_tokens = tok:weight, tok:weight, ...
    std::string signals = cfg.get_string("signal_tokens", "");
    cfg.finish();
    std::istringstream in(signals);
    std::string item;
    while (std::getline(in, item, ',')) {
        size_t colon = item.find(':');
        if (colon == std::string::npos) {
            throw ValidationError("signal_tokens entries need 'token:weight', got '" + item + "'");
        }
        auto strip = [](std::string s) {
            size_t b = s.find_first_not_of(" \t");
            size_t e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string token = strip(item.substr(0, colon));
        std::string weight = strip(item.substr(colon + 1));
        try {
            spec.signal_tokens.emplace_back(token, std::stod(weight));
        } catch (const std::exception&) {
            throw ValidationError("bad signal token weight '" + weight + "' for '" + token + "'");
        }
    }
    spec.validate();
    return spec;
}

}  // namespace lexpred::corpus
