#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bsosim/errors.hpp"
#include "bsosim/rng.hpp"

namespace bsosim {

enum class MessageKind { ExcitationComplete, IndexList, PhaseShiftAnnounce, LockIterationSync };
enum class Sender { Alice, Bob };

inline const char* kind_name(MessageKind k) {
    switch (k) {
        case MessageKind::ExcitationComplete: return "ExcitationComplete";
        case MessageKind::IndexList: return "IndexList";
        case MessageKind::PhaseShiftAnnounce: return "PhaseShiftAnnounce";
        case MessageKind::LockIterationSync: return "LockIterationSync";
    }
    return "?";
}

inline const char* sender_name(Sender s) { return s == Sender::Alice ? "Alice" : "Bob"; }

// monostate | index list | announced phase offset (rad) | lock iteration
using MessagePayload =
    std::variant<std::monostate, std::vector<std::int64_t>, double, std::int64_t>;

struct Message {
    MessageKind kind = MessageKind::ExcitationComplete;
    Sender sender = Sender::Alice;
    std::int64_t sequence = 0; // assigned by the channel at send time
    MessagePayload payload;
};

struct ChannelModel {
    double base_latency = 0.0;
    double jitter = 0.0; // half-width of a uniform delay spread
    double drop_probability = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (base_latency < 0 || jitter < 0)
            throw Error("ChannelModel: latency and jitter must be >= 0");
        if (drop_probability < 0.0 || drop_probability >= 1.0)
            throw Error("ChannelModel: drop_probability must be in [0, 1)");
    }
};

struct DeliveryToken {
    std::int64_t sequence = 0;
    double send_time = 0.0;
    double delivery_time = 0.0;
    bool dropped = false;
};

struct TranscriptRecord {
    std::int64_t sequence = 0;
    Sender sender = Sender::Alice;
    MessageKind kind = MessageKind::ExcitationComplete;
    MessagePayload payload;
    double send_time = 0.0;
    double delivery_time = 0.0;
    bool dropped = false;
};

// Classical digital channel on the experiment's logical clock. Per-sender
// delivery is FIFO even under jitter; messages are re-ordered only across
// senders.
class Channel {
public:
    explicit Channel(const ChannelModel& model = {})
        : model_(model), rng_(make_stream(model.seed, "channel")) {
        model_.validate();
    }

    double now() const { return now_; }

    void advance_to(double t) {
        if (t > now_) now_ = t;
    }

    void close() { open_ = false; }
    bool is_open() const { return open_; }

    DeliveryToken send(Message msg) {
        if (!open_) throw ChannelClosed("send: channel closed");
        validate_payload(msg);
        auto& seq = next_seq_[static_cast<int>(msg.sender)];
        msg.sequence = seq++;
        DeliveryToken tok;
        tok.sequence = msg.sequence;
        tok.send_time = now_;
        const double draw = model_.jitter > 0 ? rng_.uniform(-model_.jitter, model_.jitter) : 0.0;
        double delivery = now_ + model_.base_latency + draw;
        if (delivery < now_) delivery = now_;
        // FIFO per sender: never deliver before an earlier message of the
        // same sender
        double& last = last_delivery_[static_cast<int>(msg.sender)];
        if (delivery < last) delivery = last;
        last = delivery;
        tok.delivery_time = delivery;
        tok.dropped = model_.drop_probability > 0.0 && rng_.bernoulli(model_.drop_probability);
        transcript_.push_back({msg.sequence, msg.sender, msg.kind, msg.payload,
                               tok.send_time, tok.delivery_time, tok.dropped});
        if (!tok.dropped) {
            queue_.push_back({tok.delivery_time, msg});
            std::stable_sort(queue_.begin(), queue_.end(),
                             [](const Pending& a, const Pending& b) {
                                 return a.delivery_time < b.delivery_time;
                             });
        }
        return tok;
    }

    // Resend until a copy goes through. Dropped copies still appear in the
    // transcript; the delivered copy's token is returned.
    DeliveryToken send_reliable(Message msg, int max_retries = 64) {
        for (int i = 0; i <= max_retries; ++i) {
            const DeliveryToken tok = send(msg);
            if (!tok.dropped) return tok;
        }
        throw Error("send_reliable: retry cap exceeded");
    }

    // Earliest message already delivered at the current time, if any.
    std::optional<Message> recv() {
        if (!open_) throw ChannelClosed("recv: channel closed");
        if (queue_.empty() || queue_.front().delivery_time > now_) return std::nullopt;
        Message m = queue_.front().msg;
        queue_.pop_front();
        return m;
    }

    std::optional<Message> try_recv() { return recv(); }

    const std::vector<TranscriptRecord>& transcript() const { return transcript_; }

private:
    struct Pending {
        double delivery_time;
        Message msg;
    };

    static void validate_payload(const Message& msg) {
        switch (msg.kind) {
            case MessageKind::ExcitationComplete:
                if (!std::holds_alternative<std::monostate>(msg.payload))
                    throw Error("ExcitationComplete carries no payload");
                break;
            case MessageKind::IndexList: {
                const auto* v = std::get_if<std::vector<std::int64_t>>(&msg.payload);
                if (!v) throw Error("IndexList payload must be an index vector");
                for (std::size_t i = 0; i < v->size(); ++i) {
                    if ((*v)[i] < 0) throw Error("IndexList entries must be >= 0");
                    if (i > 0 && (*v)[i] <= (*v)[i - 1])
                        throw Error("IndexList entries must be unique and sorted");
                }
                break;
            }
            case MessageKind::PhaseShiftAnnounce:
                if (!std::holds_alternative<double>(msg.payload))
                    throw Error("PhaseShiftAnnounce payload must be an angle");
                break;
            case MessageKind::LockIterationSync:
                if (!std::holds_alternative<std::int64_t>(msg.payload))
                    throw Error("LockIterationSync payload must be an iteration index");
                break;
        }
    }

    ChannelModel model_;
    Rng rng_;
    double now_ = 0.0;
    bool open_ = true;
    std::int64_t next_seq_[2] = {0, 0};
    double last_delivery_[2] = {0.0, 0.0};
    std::deque<Pending> queue_;
    std::vector<TranscriptRecord> transcript_;
};

struct AuditReport {
    bool ok = true;
    std::string detail;
};

// The protocol's premise is that no timing signal crosses the channel: no
// payload may carry an absolute timestamp or a sampled oscillator phase.
// Index lists are plain integers; the only angle allowed is the announced
// discrete run-2 offset.
inline AuditReport audit_transcript(const std::vector<TranscriptRecord>& transcript,
                                    const std::vector<double>& allowed_angles,
                                    std::int64_t index_bound = -1) {
    AuditReport rep;
    std::int64_t last_seq[2] = {-1, -1};
    for (const auto& r : transcript) {
        if (r.sequence <= last_seq[static_cast<int>(r.sender)]) {
            rep.ok = false;
            rep.detail = "sequence not strictly increasing";
            return rep;
        }
        last_seq[static_cast<int>(r.sender)] = r.sequence;
        if (const auto* v = std::get_if<std::vector<std::int64_t>>(&r.payload)) {
            if (r.kind != MessageKind::IndexList) {
                rep.ok = false;
                rep.detail = "index vector on a non-IndexList message";
                return rep;
            }
            for (std::size_t i = 0; i < v->size(); ++i) {
                if ((*v)[i] < 0 || (index_bound >= 0 && (*v)[i] >= index_bound) ||
                    (i > 0 && (*v)[i] <= (*v)[i - 1])) {
                    rep.ok = false;
                    rep.detail = "index list out of range or unsorted";
                    return rep;
                }
            }
        } else if (const auto* d = std::get_if<double>(&r.payload)) {
            if (r.kind != MessageKind::PhaseShiftAnnounce) {
                rep.ok = false;
                rep.detail = "raw real payload outside PhaseShiftAnnounce";
                return rep;
            }
            bool allowed = false;
            for (double a : allowed_angles)
                if (std::abs(*d - a) < 1e-12) allowed = true;
            if (!allowed) {
                rep.ok = false;
                rep.detail = "announced angle not in the allowed discrete set";
                return rep;
            }
        }
    }
    return rep;
}

} // namespace bsosim
