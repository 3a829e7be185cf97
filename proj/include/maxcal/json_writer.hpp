#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace maxcal {

// Deterministic JSON emission: fixed key order is the caller's business, this
// class just guarantees stable number formatting (%.12g, no negative zero) so
// equal inputs give byte-equal documents.
inline std::string fmt_g(double v) {
    if (v == 0.0) v = 0.0; // squash -0
    if (std::isnan(v)) return "null";
    if (std::isinf(v)) return v > 0 ? "1e999" : "-1e999";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

class JsonWriter {
  public:
    JsonWriter& begin_object() { prefix(); out_ += '{'; stack_.push_back({'o', 0}); return *this; }
    JsonWriter& end_object() { out_ += '}'; stack_.pop_back(); bump(); return *this; }
    JsonWriter& begin_array() { prefix(); out_ += '['; stack_.push_back({'a', 0}); return *this; }
    JsonWriter& end_array() { out_ += ']'; stack_.pop_back(); bump(); return *this; }

    JsonWriter& key(const std::string& k) {
        comma();
        out_ += '"';
        escape(k);
        out_ += "\":";
        pending_key_ = true;
        return *this;
    }

    JsonWriter& value(double v) { prefix(); out_ += fmt_g(v); bump(); return *this; }
    JsonWriter& value_int(long long v) { prefix(); out_ += std::to_string(v); bump(); return *this; }
    JsonWriter& value(const std::string& s) {
        prefix();
        out_ += '"';
        escape(s);
        out_ += '"';
        bump();
        return *this;
    }
    JsonWriter& value(const char* s) { return value(std::string(s)); }
    JsonWriter& value(bool b) { prefix(); out_ += b ? "true" : "false"; bump(); return *this; }
    JsonWriter& null() { prefix(); out_ += "null"; bump(); return *this; }
    // embeds a pre-serialized JSON value verbatim
    JsonWriter& raw(const std::string& json) { prefix(); out_ += json; bump(); return *this; }

    const std::string& str() const { return out_; }

  private:
    struct Frame { char kind; int count; };

    void comma() {
        if (!stack_.empty() && stack_.back().count > 0) out_ += ',';
    }
    void prefix() {
        if (pending_key_) { pending_key_ = false; return; }
        comma();
    }
    void bump() {
        if (!stack_.empty()) ++stack_.back().count;
    }
    void escape(const std::string& s) {
        for (char c : s) {
            switch (c) {
                case '"': out_ += "\\\""; break;
                case '\\': out_ += "\\\\"; break;
                case '\n': out_ += "\\n"; break;
                case '\r': out_ += "\\r"; break;
                case '\t': out_ += "\\t"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                        out_ += buf;
                    } else {
                        out_ += c;
                    }
            }
        }
    }

    std::string out_;
    std::vector<Frame> stack_;
    bool pending_key_ = false;
};

} // namespace maxcal
