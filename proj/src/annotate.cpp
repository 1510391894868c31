#include "numgraph/annotate.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace numgraph {

using nlohmann::json;

namespace {

bool is_ascii_alpha(unsigned char c) { return std::isalpha(c) != 0 && c < 0x80; }
bool is_digit(unsigned char c) { return std::isdigit(c) != 0; }
// Non-ASCII bytes are treated as word characters so UTF-8 never splits.
bool is_word_char(unsigned char c) { return c >= 0x80 || std::isalnum(c) != 0; }
bool is_upper(unsigned char c) { return c >= 'A' && c <= 'Z'; }

std::string lower(const std::string& s) {
  std::string out = s;
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const std::unordered_set<std::string>& abbreviations() {
  static const std::unordered_set<std::string> kAbbrev = {
      "mr",  "mrs", "ms",  "dr",   "jr",  "sr",  "st",  "no",   "vs",
      "etc", "inc", "ltd", "col",  "gen", "lt",  "capt","sgt",  "prof",
      "rev", "hon", "jan", "feb",  "mar", "apr", "jun", "jul",  "aug",
      "sep", "sept","oct", "nov",  "dec", "approx", "dept", "est"};
  return kAbbrev;
}

}  // namespace

const char* to_string(NumberType t) {
  static constexpr std::array<const char*, kNumNumberTypes> kNames = {
      "NUMBER", "PERCENT", "MONEY", "TIME", "DATE", "DURATION", "ORDINAL", "YARD"};
  return kNames[static_cast<int>(t)];
}

std::optional<NumberType> number_type_from_string(const std::string& s) {
  for (int i = 0; i < kNumNumberTypes; ++i)
    if (s == to_string(static_cast<NumberType>(i))) return static_cast<NumberType>(i);
  return std::nullopt;
}

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> out;
  std::size_t n = text.size();
  std::size_t i = 0;
  std::size_t sid = 0;

  auto emit = [&](std::size_t start, std::size_t end) {
    out.push_back(Token{text.substr(start, end - start), start, end, sid});
  };

  while (i < n) {
    unsigned char ch = text[i];
    if (std::isspace(ch)) {
      ++i;
      continue;
    }
    if (ch == '%' || ch == '$') {
      emit(i, i + 1);
      ++i;
      continue;
    }
    if (is_word_char(ch)) {
      std::size_t start = i;
      while (i < n) {
        unsigned char c = text[i];
        if (is_word_char(c)) {
          ++i;
          continue;
        }
        bool internal = (c == '.' || c == ',' || c == ':' || c == '/') && i > start &&
                        is_digit(text[i - 1]) && i + 1 < n && is_digit(text[i + 1]);
        if (!internal) break;
        ++i;
      }
      emit(start, i);
      continue;
    }
    if (ch == '-') {
      bool tight_after_number = !out.empty() && out.back().char_end == i &&
                                is_digit(out.back().text.back());
      bool unit_follows = i + 1 < n && is_ascii_alpha(text[i + 1]);
      if (tight_after_number && unit_follows) emit(i, i + 1);
      ++i;
      continue;
    }
    if (ch == '.' || ch == '!' || ch == '?') {
      bool abbrev = ch == '.' && !out.empty() && out.back().char_end == i &&
                    (abbreviations().count(lower(out.back().text)) > 0 ||
                     (out.back().text.size() == 1 && is_upper(out.back().text[0])));
      std::size_t q = i + 1;
      bool saw_space = false;
      while (q < n && std::isspace(static_cast<unsigned char>(text[q]))) {
        saw_space = true;
        ++q;
      }
      if (!abbrev && saw_space && q < n && is_upper(text[q])) ++sid;
      ++i;
      continue;
    }
    ++i;  // any other punctuation is a silent delimiter
  }
  return out;
}

namespace {

// ---- numeric token parsing --------------------------------------------------

bool parse_plain_number(const std::string& s, double* out) {
  if (s.empty() || !is_digit(s[0])) return false;
  std::string digits;
  if (s.find(',') != std::string::npos) {
    // Validate 3-digit grouping: 1-3 leading digits, then ,ddd groups.
    std::size_t p = 0;
    std::size_t first = s.find(',');
    if (first == 0 || first > 3) return false;
    for (std::size_t k = 0; k < first; ++k)
      if (!is_digit(s[k])) return false;
    digits = s.substr(0, first);
    p = first;
    while (p < s.size() && s[p] == ',') {
      if (p + 3 >= s.size()) return false;
      for (std::size_t k = 1; k <= 3; ++k)
        if (!is_digit(s[p + k])) return false;
      digits += s.substr(p + 1, 3);
      p += 4;
    }
    if (p < s.size()) {
      if (s[p] != '.') return false;
      for (std::size_t k = p + 1; k < s.size(); ++k)
        if (!is_digit(s[k])) return false;
      digits += s.substr(p);
    }
  } else {
    std::size_t dots = 0;
    for (unsigned char c : s) {
      if (c == '.') {
        ++dots;
        continue;
      }
      if (!is_digit(c)) return false;
    }
    if (dots > 1 || s.back() == '.') return false;
    digits = s;
  }
  try {
    *out = std::stod(digits);
  } catch (...) {
    return false;
  }
  return std::isfinite(*out);
}

bool parse_int_field(const std::string& s, int* out) {
  if (s.empty() || s.size() > 4) return false;
  int v = 0;
  for (unsigned char c : s) {
    if (!is_digit(c)) return false;
    v = v * 10 + (c - '0');
  }
  *out = v;
  return true;
}

bool is_plain_4digit(const std::string& s) {
  return s.size() == 4 && is_digit(s[0]) && is_digit(s[1]) && is_digit(s[2]) &&
         is_digit(s[3]);
}

bool parse_year_token(const std::string& s, int* year) {
  if (!is_plain_4digit(s)) return false;
  int v = 0;
  parse_int_field(s, &v);
  if (v < 1000 || v > 2100) return false;
  if (year) *year = v;
  return true;
}

bool parse_time(const std::string& s, double* minutes) {
  std::size_t c = s.find(':');
  if (c == std::string::npos || c == 0 || c > 2) return false;
  std::string rest = s.substr(c + 1);
  std::string mm = rest.substr(0, 2);
  if (rest.size() != 2 && !(rest.size() == 5 && rest[2] == ':')) return false;
  int h = 0, m = 0;
  if (!parse_int_field(s.substr(0, c), &h) || !parse_int_field(mm, &m)) return false;
  if (h > 23 || m > 59) return false;
  if (rest.size() == 5) {
    int sec = 0;
    if (!parse_int_field(rest.substr(3), &sec) || sec > 59) return false;
  }
  *minutes = h * 60.0 + m;
  return true;
}

bool parse_slash_date(const std::string& s, DateValue* dv) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t p = 0; p <= s.size(); ++p) {
    if (p == s.size() || s[p] == '/') {
      parts.push_back(s.substr(start, p - start));
      start = p + 1;
    }
  }
  int month = 0, day = 1, year = 0;
  if (parts.size() == 2) {
    if (!parse_int_field(parts[0], &month) || parts[1].size() != 4 ||
        !parse_int_field(parts[1], &year))
      return false;
  } else if (parts.size() == 3) {
    if (!parse_int_field(parts[0], &month) || !parse_int_field(parts[1], &day) ||
        parts[2].size() != 4 || !parse_int_field(parts[2], &year))
      return false;
  } else {
    return false;
  }
  if (month < 1 || month > 12 || day < 1 || day > 31) return false;
  *dv = DateValue{year, month, day};
  return true;
}

const std::unordered_map<std::string, int>& month_names() {
  static const std::unordered_map<std::string, int> kMonths = {
      {"january", 1},  {"february", 2}, {"march", 3},    {"april", 4},
      {"may", 5},      {"june", 6},     {"july", 7},     {"august", 8},
      {"september", 9},{"october", 10}, {"november", 11},{"december", 12},
      {"jan", 1},      {"feb", 2},      {"mar", 3},      {"apr", 4},
      {"jun", 6},      {"jul", 7},      {"aug", 8},      {"sep", 9},
      {"sept", 9},     {"oct", 10},     {"nov", 11},     {"dec", 12}};
  return kMonths;
}

const std::unordered_map<std::string, int>& ordinal_words() {
  static const std::unordered_map<std::string, int> kOrdinals = {
      {"first", 1}, {"second", 2}, {"third", 3}, {"fourth", 4}, {"fifth", 5},
      {"sixth", 6}, {"seventh", 7}, {"eighth", 8}, {"ninth", 9}, {"tenth", 10}};
  return kOrdinals;
}

bool parse_digit_ordinal(const std::string& s, double* out) {
  if (s.size() < 3) return false;
  std::string suffix = lower(s.substr(s.size() - 2));
  if (suffix != "st" && suffix != "nd" && suffix != "rd" && suffix != "th") return false;
  std::string head = s.substr(0, s.size() - 2);
  double v = 0;
  if (!parse_plain_number(head, &v)) return false;
  *out = v;
  return true;
}

const std::unordered_map<std::string, long>& number_words() {
  static const std::unordered_map<std::string, long> kWords = {
      {"zero", 0},     {"one", 1},       {"two", 2},      {"three", 3},
      {"four", 4},     {"five", 5},      {"six", 6},      {"seven", 7},
      {"eight", 8},    {"nine", 9},      {"ten", 10},     {"eleven", 11},
      {"twelve", 12},  {"thirteen", 13}, {"fourteen", 14},{"fifteen", 15},
      {"sixteen", 16}, {"seventeen", 17},{"eighteen", 18},{"nineteen", 19},
      {"twenty", 20},  {"thirty", 30},   {"forty", 40},   {"fifty", 50},
      {"sixty", 60},   {"seventy", 70},  {"eighty", 80},  {"ninety", 90},
      {"hundred", 100},{"thousand", 1000}};
  return kWords;
}

// Combine a run of number words; false on malformed or > 999,999 results.
bool combine_number_words(const std::vector<long>& vals, double* out) {
  long total = 0, cur = 0;
  bool any_value = false;
  for (long v : vals) {
    if (v == 100) {
      cur = (cur == 0 ? 1 : cur) * 100;
    } else if (v == 1000) {
      total += (cur == 0 ? 1 : cur) * 1000;
      cur = 0;
    } else {
      cur += v;
      any_value = true;
    }
    if (total + cur > 999999) return false;
  }
  if (!any_value && total == 0 && cur == 0) return false;
  *out = static_cast<double>(total + cur);
  return true;
}

bool contains_digit(const std::string& s) {
  for (unsigned char c : s)
    if (is_digit(c)) return true;
  return false;
}

const std::unordered_set<std::string>& duration_units() {
  static const std::unordered_set<std::string> kUnits = {
      "second", "seconds", "minute", "minutes", "hour",  "hours",
      "day",    "days",    "week",   "weeks",   "month", "months",
      "year",   "years",   "decade", "decades"};
  return kUnits;
}

const std::unordered_set<std::string>& currency_words() {
  static const std::unordered_set<std::string> kCurrency = {
      "dollar", "dollars", "cent",  "cents",  "euro",  "euros",
      "pound",  "pounds",  "franc", "francs", "usd"};
  return kCurrency;
}

bool is_capitalized(const std::string& s) { return !s.empty() && is_upper(s[0]); }

}  // namespace

std::vector<NumberMention> extract_numbers(const std::vector<Token>& tokens,
                                           std::vector<std::string>* warnings) {
  std::vector<NumberMention> out;
  std::size_t n = tokens.size();
  auto warn = [&](const std::string& msg) {
    if (warnings) warnings->push_back(msg);
  };
  auto same_sent = [&](std::size_t a, std::size_t b) {
    return b < n && tokens[a].sentence_id == tokens[b].sentence_id;
  };

  std::size_t i = 0;
  while (i < n) {
    const std::string& text = tokens[i].text;
    std::string lo = lower(text);

    if (text == "$" && same_sent(i, i + 1)) {
      double v = 0;
      if (parse_plain_number(tokens[i + 1].text, &v)) {
        out.push_back({i, i + 1, v, NumberType::MONEY, {}});
        i += 2;
        continue;
      }
    }

    // Month-anchored date patterns (months are written capitalized in prose).
    if (is_capitalized(text) && month_names().count(lo)) {
      int month = month_names().at(lo);
      DateValue dv{0, month, 1};
      std::size_t last = i;
      int day = 0, year = 0;
      if (same_sent(i, i + 1) && parse_int_field(tokens[i + 1].text, &day) &&
          !is_plain_4digit(tokens[i + 1].text) && day >= 1 && day <= 31) {
        dv.day = day;
        last = i + 1;
      }
      if (same_sent(i, last + 1) && parse_year_token(tokens[last + 1].text, &year)) {
        dv.year = year;
        last = last + 1;
      }
      out.push_back({i, last, dv.scalar(), NumberType::DATE, dv});
      i = last + 1;
      continue;
    }

    // Numeric anchor: a numeral token or a run of number words.
    double value = 0;
    std::size_t anchor_last = i;
    bool numeral = parse_plain_number(text, &value);
    bool have_anchor = numeral;
    if (!have_anchor && number_words().count(lo)) {
      std::vector<long> run;
      std::size_t j = i;
      while (j < n && tokens[j].sentence_id == tokens[i].sentence_id &&
             number_words().count(lower(tokens[j].text)))
        run.push_back(number_words().at(lower(tokens[j].text))), ++j;
      if (combine_number_words(run, &value)) {
        have_anchor = true;
        anchor_last = j - 1;
      }
    }

    if (have_anchor) {
      std::size_t next = anchor_last + 1;
      bool has_next = same_sent(anchor_last, next);
      std::string next_lo = has_next ? lower(tokens[next].text) : "";
      bool hyphen = has_next && tokens[next].text == "-" && same_sent(anchor_last, next + 1);
      std::string after_hyphen = hyphen ? lower(tokens[next + 1].text) : "";

      if (has_next && (tokens[next].text == "%" || next_lo == "percent")) {
        out.push_back({i, next, value, NumberType::PERCENT, {}});
        i = next + 1;
      } else if (has_next && currency_words().count(next_lo)) {
        out.push_back({i, next, value, NumberType::MONEY, {}});
        i = next + 1;
      } else if (has_next && (next_lo == "yard" || next_lo == "yards")) {
        out.push_back({i, next, value, NumberType::YARD, {}});
        i = next + 1;
      } else if (hyphen && (after_hyphen == "yard" || after_hyphen == "yards")) {
        out.push_back({i, next + 1, value, NumberType::YARD, {}});
        i = next + 2;
      } else if (numeral && parse_year_token(text, nullptr) &&
                 !(has_next && is_capitalized(tokens[next].text) &&
                   month_names().count(next_lo))) {
        int year = 0;
        parse_year_token(text, &year);
        DateValue dv{year, 1, 1};
        out.push_back({i, i, dv.scalar(), NumberType::DATE, dv});
        i = anchor_last + 1;
      } else if (numeral && value >= 1 && value <= 31 && value == std::floor(value) &&
                 has_next && is_capitalized(tokens[next].text) &&
                 month_names().count(next_lo)) {
        DateValue dv{0, month_names().at(next_lo), static_cast<int>(value)};
        std::size_t last = next;
        int year = 0;
        if (same_sent(next, next + 1) && parse_year_token(tokens[next + 1].text, &year)) {
          dv.year = year;
          last = next + 1;
        }
        out.push_back({i, last, dv.scalar(), NumberType::DATE, dv});
        i = last + 1;
      } else if (has_next && duration_units().count(next_lo)) {
        out.push_back({i, next, value, NumberType::DURATION, {}});
        i = next + 1;
      } else if (hyphen && duration_units().count(after_hyphen)) {
        out.push_back({i, next + 1, value, NumberType::DURATION, {}});
        i = next + 2;
      } else {
        out.push_back({i, anchor_last, value, NumberType::NUMBER, {}});
        i = anchor_last + 1;
      }
      continue;
    }

    double minutes = 0;
    if (parse_time(text, &minutes)) {
      out.push_back({i, i, minutes, NumberType::TIME, {}});
      ++i;
      continue;
    }
    DateValue dv;
    if (parse_slash_date(text, &dv)) {
      out.push_back({i, i, dv.scalar(), NumberType::DATE, dv});
      ++i;
      continue;
    }
    if (ordinal_words().count(lo)) {
      out.push_back({i, i, double(ordinal_words().at(lo)), NumberType::ORDINAL, {}});
      ++i;
      continue;
    }
    double ord = 0;
    if (parse_digit_ordinal(text, &ord)) {
      out.push_back({i, i, ord, NumberType::ORDINAL, {}});
      ++i;
      continue;
    }
    if (contains_digit(text))
      warn("skipped unparseable number candidate '" + text + "' at token " +
           std::to_string(i));
    ++i;
  }
  return out;
}

std::vector<EntityMention> extract_entities(const std::vector<Token>& tokens) {
  std::vector<bool> covered(tokens.size(), false);
  for (const auto& m : extract_numbers(tokens))
    for (std::size_t k = m.first; k <= m.last; ++k) covered[k] = true;

  auto initial = [&](std::size_t i) {
    return i == 0 || tokens[i].sentence_id != tokens[i - 1].sentence_id;
  };
  std::unordered_set<std::string> recurs;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (!initial(i) && is_capitalized(tokens[i].text)) recurs.insert(lower(tokens[i].text));

  auto eligible = [&](std::size_t i) {
    if (covered[i] || !is_capitalized(tokens[i].text)) return false;
    return !initial(i) || recurs.count(lower(tokens[i].text)) > 0;
  };

  std::vector<EntityMention> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    if (!eligible(i)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < tokens.size() && eligible(j + 1) &&
           tokens[j + 1].sentence_id == tokens[j].sentence_id)
      ++j;
    out.push_back({i, j});
    i = j + 1;
  }
  return out;
}

AnnotatedPassage annotate(const std::string& question, const std::string& passage) {
  AnnotatedPassage ann;
  ann.question.tokens = tokenize(question);
  ann.question.numbers = extract_numbers(ann.question.tokens, &ann.warnings);
  ann.question.entities = extract_entities(ann.question.tokens);
  ann.passage.tokens = tokenize(passage);
  ann.passage.numbers = extract_numbers(ann.passage.tokens, &ann.warnings);
  ann.passage.entities = extract_entities(ann.passage.tokens);
  validate(ann);
  return ann;
}

namespace {

std::string span_str(std::size_t a, std::size_t b) {
  return "[" + std::to_string(a) + "," + std::to_string(b) + "]";
}

void validate_text(const TextAnnotation& t, const std::string& which) {
  for (std::size_t i = 0; i < t.tokens.size(); ++i) {
    const Token& tk = t.tokens[i];
    if (tk.char_start >= tk.char_end)
      throw AnnotationError(which + " token " + std::to_string(i) +
                            " has empty char range");
    if (i > 0 && t.tokens[i - 1].char_end > tk.char_start)
      throw AnnotationError(which + " tokens " + std::to_string(i - 1) + " and " +
                            std::to_string(i) + " overlap or are out of order");
    if (i > 0 && t.tokens[i - 1].sentence_id > tk.sentence_id)
      throw AnnotationError(which + " sentence ids decrease at token " +
                            std::to_string(i));
  }
  auto check_span = [&](std::size_t first, std::size_t last, const std::string& kind) {
    if (first > last || last >= t.tokens.size())
      throw AnnotationError(which + " " + kind + " mention span " +
                            span_str(first, last) + " out of range (" +
                            std::to_string(t.tokens.size()) + " tokens)");
  };
  std::size_t prev_end = 0;
  bool first_num = true;
  for (const auto& m : t.numbers) {
    check_span(m.first, m.last, "number");
    if (t.tokens[m.first].sentence_id != t.tokens[m.last].sentence_id)
      throw AnnotationError(which + " number mention " + span_str(m.first, m.last) +
                            " crosses a sentence boundary");
    if (!std::isfinite(m.value))
      throw AnnotationError(which + " number mention " + span_str(m.first, m.last) +
                            " has a non-finite value");
    if (!first_num && m.first <= prev_end)
      throw AnnotationError(which + " number mentions overlap or are out of order at " +
                            span_str(m.first, m.last));
    prev_end = m.last;
    first_num = false;
  }
  prev_end = 0;
  bool first_ent = true;
  for (const auto& e : t.entities) {
    check_span(e.first, e.last, "entity");
    if (!first_ent && e.first <= prev_end)
      throw AnnotationError(which + " entity mentions overlap or are out of order at " +
                            span_str(e.first, e.last));
    prev_end = e.last;
    first_ent = false;
  }
}

json text_to_json(const TextAnnotation& t) {
  json toks = json::array();
  for (const auto& tk : t.tokens)
    toks.push_back({{"text", tk.text},
                    {"start", tk.char_start},
                    {"end", tk.char_end},
                    {"sent", tk.sentence_id}});
  json nums = json::array();
  for (const auto& m : t.numbers) {
    json o = {{"span", {m.first, m.last}},
              {"value", m.value},
              {"type", to_string(m.ntype)}};
    if (m.ntype == NumberType::DATE)
      o["date"] = {m.date.year, m.date.month, m.date.day};
    nums.push_back(std::move(o));
  }
  json ents = json::array();
  for (const auto& e : t.entities) ents.push_back({{"span", {e.first, e.last}}});
  return {{"tokens", std::move(toks)},
          {"numbers", std::move(nums)},
          {"entities", std::move(ents)}};
}

TextAnnotation text_from_json(const json& j, const std::string& which) {
  TextAnnotation t;
  if (!j.is_object() || !j.contains("tokens"))
    throw AnnotationError("annotation '" + which + "' section missing tokens");
  for (const auto& tk : j.at("tokens"))
    t.tokens.push_back(Token{tk.at("text").get<std::string>(),
                             tk.at("start").get<std::size_t>(),
                             tk.at("end").get<std::size_t>(),
                             tk.at("sent").get<std::size_t>()});
  for (const auto& m : j.value("numbers", json::array())) {
    NumberMention nm;
    nm.first = m.at("span").at(0).get<std::size_t>();
    nm.last = m.at("span").at(1).get<std::size_t>();
    nm.value = m.at("value").get<double>();
    auto ty = number_type_from_string(m.at("type").get<std::string>());
    if (!ty)
      throw AnnotationError(which + " number mention " + span_str(nm.first, nm.last) +
                            " has unknown type '" + m.at("type").get<std::string>() + "'");
    nm.ntype = *ty;
    if (m.contains("date"))
      nm.date = DateValue{m.at("date").at(0).get<int>(), m.at("date").at(1).get<int>(),
                          m.at("date").at(2).get<int>()};
    t.numbers.push_back(nm);
  }
  for (const auto& e : j.value("entities", json::array()))
    t.entities.push_back(
        {e.at("span").at(0).get<std::size_t>(), e.at("span").at(1).get<std::size_t>()});
  return t;
}

}  // namespace

void validate(const AnnotatedPassage& ann) {
  validate_text(ann.question, "question");
  validate_text(ann.passage, "passage");
}

std::string serialize_annotations(const AnnotatedPassage& ann) {
  json j = {{"question", text_to_json(ann.question)},
            {"passage", text_to_json(ann.passage)},
            {"warnings", ann.warnings}};
  return j.dump(2);
}

AnnotatedPassage parse_annotations(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw AnnotationError(std::string("annotation parse error: ") + e.what());
  }
  AnnotatedPassage ann;
  try {
    ann.question = text_from_json(j.at("question"), "question");
    ann.passage = text_from_json(j.at("passage"), "passage");
    if (j.contains("warnings"))
      ann.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw AnnotationError(std::string("annotation field error: ") + e.what());
  }
  validate(ann);
  return ann;
}

AnnotatedPassage load_annotations(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw AnnotationError("cannot open annotation file '" + path + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_annotations(buf.str());
}

}  // namespace numgraph
