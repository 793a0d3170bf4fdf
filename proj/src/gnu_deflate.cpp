#include "revive/gnu_deflate.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

namespace revive {

namespace {

constexpr unsigned WSIZE = 0x8000;
constexpr unsigned WMASK = WSIZE - 1;
constexpr unsigned MIN_MATCH = 3;
constexpr unsigned MAX_MATCH = 258;
constexpr unsigned MIN_LOOKAHEAD = MAX_MATCH + MIN_MATCH + 1;
constexpr unsigned MAX_DIST = WSIZE - MIN_LOOKAHEAD;
constexpr unsigned HASH_BITS = 15;
constexpr unsigned HASH_SIZE = 1u << HASH_BITS;
constexpr unsigned HASH_MASK = HASH_SIZE - 1;
constexpr unsigned H_SHIFT = (HASH_BITS + MIN_MATCH - 1) / MIN_MATCH;
constexpr unsigned TOO_FAR = 4096;
constexpr unsigned NIL = 0;
constexpr std::uint64_t WINDOW_SIZE = 2ull * WSIZE;

constexpr unsigned RSYNC_WIN = 4096;
constexpr std::uint64_t NO_CHUNK_END = 0xFFFFFFFFull;

constexpr int MAX_BITS = 15;
constexpr int MAX_BL_BITS = 7;
constexpr int LENGTH_CODES = 29;
constexpr int LITERALS = 256;
constexpr int END_BLOCK = 256;
constexpr int L_CODES = LITERALS + 1 + LENGTH_CODES;
constexpr int D_CODES = 30;
constexpr int BL_CODES = 19;
constexpr int STORED_BLOCK = 0;
constexpr int STATIC_TREES = 1;
constexpr int DYN_TREES = 2;
constexpr unsigned LIT_BUFSIZE = 0x8000;
constexpr unsigned DIST_BUFSIZE = LIT_BUFSIZE;
constexpr int REP_3_6 = 16;
constexpr int REPZ_3_10 = 17;
constexpr int REPZ_11_138 = 18;
constexpr int HEAP_SIZE = 2 * L_CODES + 1;

constexpr int extra_lbits[LENGTH_CODES] = {0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2,
                                           2, 3, 3, 3, 3, 4, 4, 4, 4, 5, 5, 5, 5, 0};
constexpr int extra_dbits[D_CODES] = {0, 0, 0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6,
                                      6, 7, 7, 8, 8, 9, 9, 10, 10, 11, 11, 12, 12, 13, 13};
constexpr int extra_blbits[BL_CODES] = {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 3, 7};
constexpr std::uint8_t bl_order[BL_CODES] = {16, 17, 18, 0, 8, 7, 9, 6, 10, 5, 11, 4, 12, 3, 13, 2, 14, 1, 15};

struct Config {
    unsigned good, lazy, nice, chain;
};

constexpr Config configuration_table[10] = {
    {0, 0, 0, 0},       {4, 4, 8, 4},       {4, 5, 16, 8},     {4, 6, 32, 32},      {4, 4, 16, 16},
    {8, 16, 32, 32},    {8, 16, 128, 128},  {8, 32, 128, 256}, {32, 128, 258, 1024}, {32, 258, 258, 4096},
};

// freq/code and dad/len share storage, as the block flushing logic relies on.
struct CtData {
    std::uint16_t fc = 0;
    std::uint16_t dl = 0;
};

struct TreeDesc {
    CtData* dyn_tree;
    const CtData* static_tree;
    const int* extra_bits;
    int extra_base;
    int elems;
    int max_length;
    int max_code;
};

unsigned bi_reverse(unsigned code, int len)
{
    unsigned res = 0;
    do {
        res |= code & 1;
        code >>= 1, res <<= 1;
    } while (--len > 0);
    return res >> 1;
}

struct StaticTables {
    std::array<CtData, L_CODES + 2> static_ltree{};
    std::array<CtData, D_CODES> static_dtree{};
    std::array<std::uint8_t, 256> length_code{};
    std::array<std::uint8_t, 512> dist_code{};
    std::array<int, LENGTH_CODES> base_length{};
    std::array<int, D_CODES> base_dist{};

    StaticTables()
    {
        int length = 0, code;
        for (code = 0; code < LENGTH_CODES - 1; code++) {
            base_length[code] = length;
            for (int n = 0; n < (1 << extra_lbits[code]); n++) length_code[length++] = static_cast<std::uint8_t>(code);
        }
        length_code[length - 1] = static_cast<std::uint8_t>(code);

        int dist = 0;
        for (code = 0; code < 16; code++) {
            base_dist[code] = dist;
            for (int n = 0; n < (1 << extra_dbits[code]); n++) dist_code[dist++] = static_cast<std::uint8_t>(code);
        }
        dist >>= 7;
        for (; code < D_CODES; code++) {
            base_dist[code] = dist << 7;
            for (int n = 0; n < (1 << (extra_dbits[code] - 7)); n++)
                dist_code[256 + dist++] = static_cast<std::uint8_t>(code);
        }

        std::array<std::uint16_t, MAX_BITS + 1> bl_count{};
        int n = 0;
        while (n <= 143) static_ltree[n++].dl = 8, bl_count[8]++;
        while (n <= 255) static_ltree[n++].dl = 9, bl_count[9]++;
        while (n <= 279) static_ltree[n++].dl = 7, bl_count[7]++;
        while (n <= 287) static_ltree[n++].dl = 8, bl_count[8]++;
        std::array<std::uint16_t, MAX_BITS + 1> next_code{};
        std::uint16_t c = 0;
        for (int bits = 1; bits <= MAX_BITS; bits++) next_code[bits] = c = static_cast<std::uint16_t>((c + bl_count[bits - 1]) << 1);
        for (n = 0; n <= L_CODES + 1; n++) {
            int len = static_ltree[n].dl;
            if (len == 0) continue;
            static_ltree[n].fc = static_cast<std::uint16_t>(bi_reverse(next_code[len]++, len));
        }
        for (n = 0; n < D_CODES; n++) {
            static_dtree[n].dl = 5;
            static_dtree[n].fc = static_cast<std::uint16_t>(bi_reverse(static_cast<unsigned>(n), 5));
        }
    }
};

const StaticTables& tables()
{
    static const StaticTables t;
    return t;
}

struct Diverged {};

class GnuDeflate {
public:
    GnuDeflate(ByteView input, int level, bool rsyncable)
        : in_(input), level_(level), rsync_(rsyncable), t_(tables())
    {
        window_.assign(WINDOW_SIZE + MAX_MATCH + MIN_MATCH, 0);
        prev_.assign(WSIZE, 0);
        head_.assign(HASH_SIZE, 0);
        l_buf_.assign(LIT_BUFSIZE, 0);
        d_buf_.assign(DIST_BUFSIZE, 0);
        flag_buf_.assign(LIT_BUFSIZE / 8, 0);
        l_desc_ = {dyn_ltree_.data(), t_.static_ltree.data(), extra_lbits, LITERALS + 1, L_CODES, MAX_BITS, 0};
        d_desc_ = {dyn_dtree_.data(), t_.static_dtree.data(), extra_dbits, 0, D_CODES, MAX_BITS, 0};
        bl_desc_ = {bl_tree_.data(), nullptr, extra_blbits, 0, BL_CODES, MAX_BL_BITS, 0};
    }

    void expect(ByteView expected) { expected_ = expected; }

    Bytes run()
    {
        init_block();
        lm_init();
        if (level_ <= 3) deflate_fast();
        else deflate_lazy();
        return std::move(out_);
    }

private:
    // --- input -------------------------------------------------------------

    unsigned read_buf(std::uint8_t* buf, unsigned size)
    {
        std::size_t n = std::min<std::size_t>(size, in_.size() - in_pos_);
        if (n) std::memcpy(buf, in_.data() + in_pos_, n);
        in_pos_ += n;
        return static_cast<unsigned>(n);
    }

    void update_hash(unsigned& h, std::uint8_t c) { h = ((h << H_SHIFT) ^ c) & HASH_MASK; }

    unsigned insert_string(unsigned s)
    {
        update_hash(ins_h_, window_[s + MIN_MATCH - 1]);
        unsigned match_head = head_[ins_h_];
        prev_[s & WMASK] = static_cast<std::uint16_t>(match_head);
        head_[ins_h_] = static_cast<std::uint16_t>(s);
        return match_head;
    }

    void lm_init()
    {
        if (level_ < 1 || level_ > 9) throw std::invalid_argument("bad compression level");
        const auto& c = configuration_table[level_];
        max_lazy_match_ = c.lazy;
        good_match_ = c.good;
        nice_match_ = c.nice;
        max_chain_length_ = c.chain;
        std::fill(head_.begin(), head_.end(), 0);
        rsync_chunk_end_ = NO_CHUNK_END;
        rsync_sum_ = 0;
        strstart_ = 0;
        block_start_ = 0;
        lookahead_ = read_buf(window_.data(), 2 * WSIZE);
        if (lookahead_ == 0) {
            eofile_ = true;
            lookahead_ = 0;
            return;
        }
        eofile_ = false;
        while (lookahead_ < MIN_LOOKAHEAD && !eofile_) fill_window();
        ins_h_ = 0;
        for (unsigned j = 0; j < MIN_MATCH - 1; j++) update_hash(ins_h_, window_[j]);
    }

    void fill_window()
    {
        unsigned more = static_cast<unsigned>(WINDOW_SIZE - lookahead_ - strstart_);
        if (more == 0xFFFFFFFFu) {
            more--;
        } else if (strstart_ >= WSIZE + MAX_DIST) {
            std::memcpy(window_.data(), window_.data() + WSIZE, WSIZE);
            match_start_ -= WSIZE;
            strstart_ -= WSIZE;
            if (rsync_chunk_end_ != NO_CHUNK_END) rsync_chunk_end_ -= WSIZE;
            block_start_ -= WSIZE;
            for (unsigned n = 0; n < HASH_SIZE; n++) {
                unsigned m = head_[n];
                head_[n] = static_cast<std::uint16_t>(m >= WSIZE ? m - WSIZE : NIL);
            }
            for (unsigned n = 0; n < WSIZE; n++) {
                unsigned m = prev_[n];
                prev_[n] = static_cast<std::uint16_t>(m >= WSIZE ? m - WSIZE : NIL);
            }
            more += WSIZE;
        }
        if (!eofile_) {
            unsigned n = read_buf(window_.data() + strstart_ + lookahead_, more);
            if (n == 0) {
                eofile_ = true;
                std::memset(window_.data() + strstart_ + lookahead_, 0, MIN_MATCH - 1);
            } else {
                lookahead_ += n;
            }
        }
    }

    unsigned longest_match(unsigned cur_match)
    {
        unsigned chain_length = max_chain_length_;
        const std::uint8_t* w = window_.data();
        const std::uint8_t* scan = w + strstart_;
        unsigned best_len = prev_length_;
        unsigned limit = strstart_ > MAX_DIST ? strstart_ - MAX_DIST : NIL;
        const std::uint8_t* strend = w + strstart_ + MAX_MATCH;
        std::uint8_t scan_end1 = scan[best_len - 1];
        std::uint8_t scan_end = scan[best_len];

        if (prev_length_ >= good_match_) chain_length >>= 2;
        do {
            const std::uint8_t* match = w + cur_match;
            if (match[best_len] != scan_end || match[best_len - 1] != scan_end1 || *match != *scan ||
                *++match != scan[1])
                continue;
            scan += 2, match++;
            do {
            } while (*++scan == *++match && *++scan == *++match && *++scan == *++match && *++scan == *++match &&
                     *++scan == *++match && *++scan == *++match && *++scan == *++match && *++scan == *++match &&
                     scan < strend);
            unsigned len = MAX_MATCH - static_cast<unsigned>(strend - scan);
            scan = strend - MAX_MATCH;
            if (len > best_len) {
                match_start_ = cur_match;
                best_len = len;
                if (len >= nice_match_) break;
                scan_end1 = scan[best_len - 1];
                scan_end = scan[best_len];
            }
        } while ((cur_match = prev_[cur_match & WMASK]) > limit && --chain_length != 0);
        return best_len;
    }

    void rsync_roll(unsigned start, unsigned num)
    {
        if (start < RSYNC_WIN) {
            for (unsigned i = start; i < RSYNC_WIN; i++) {
                if (i == start + num) return;
                rsync_sum_ += window_[i];
            }
            num -= RSYNC_WIN - start;
            start = RSYNC_WIN;
        }
        for (unsigned i = start; i < start + num; i++) {
            rsync_sum_ += window_[i];
            rsync_sum_ -= window_[i - RSYNC_WIN];
            if (rsync_chunk_end_ == NO_CHUNK_END && (rsync_sum_ % RSYNC_WIN) == 0) rsync_chunk_end_ = i;
        }
    }

    void rsync_roll_if(unsigned start, unsigned num)
    {
        if (rsync_) rsync_roll(start, num);
    }

    void flush(int flush, bool eof)
    {
        const std::uint8_t* buf = block_start_ >= 0 ? window_.data() + block_start_ : nullptr;
        flush_block(buf, static_cast<std::uint64_t>(static_cast<std::int64_t>(strstart_) - block_start_), flush - 1,
                    eof);
    }

    bool rsync_boundary() const { return rsync_ && strstart_ > rsync_chunk_end_; }

    void deflate_fast()
    {
        int flush_flag = 0;
        unsigned match_length = 0;

        prev_length_ = MIN_MATCH - 1;
        while (lookahead_ != 0) {
            unsigned hash_head = insert_string(strstart_);
            if (hash_head != NIL && strstart_ - hash_head <= MAX_DIST && strstart_ <= WINDOW_SIZE - MIN_LOOKAHEAD) {
                match_length = longest_match(hash_head);
                if (match_length > lookahead_) match_length = lookahead_;
            }
            if (match_length >= MIN_MATCH) {
                flush_flag = ct_tally(strstart_ - match_start_, match_length - MIN_MATCH);
                lookahead_ -= match_length;
                rsync_roll_if(strstart_, match_length);
                if (match_length <= max_lazy_match_) {
                    match_length--;
                    do {
                        strstart_++;
                        insert_string(strstart_);
                    } while (--match_length != 0);
                    strstart_++;
                } else {
                    strstart_ += match_length;
                    match_length = 0;
                    ins_h_ = window_[strstart_];
                    update_hash(ins_h_, window_[strstart_ + 1]);
                }
            } else {
                flush_flag = ct_tally(0, window_[strstart_]);
                rsync_roll_if(strstart_, 1);
                lookahead_--;
                strstart_++;
            }
            if (rsync_boundary()) {
                rsync_chunk_end_ = NO_CHUNK_END;
                flush_flag = 2;
            }
            if (flush_flag) {
                flush(flush_flag, false);
                block_start_ = strstart_;
            }
            while (lookahead_ < MIN_LOOKAHEAD && !eofile_) fill_window();
        }
        flush(flush_flag, true);
    }

    void deflate_lazy()
    {
        int flush_flag = 0;
        bool match_available = false;
        unsigned match_length = MIN_MATCH - 1;

        while (lookahead_ != 0) {
            unsigned hash_head = insert_string(strstart_);
            prev_length_ = match_length;
            unsigned prev_match = match_start_;
            match_length = MIN_MATCH - 1;

            if (hash_head != NIL && prev_length_ < max_lazy_match_ && strstart_ - hash_head <= MAX_DIST &&
                strstart_ <= WINDOW_SIZE - MIN_LOOKAHEAD) {
                match_length = longest_match(hash_head);
                if (match_length > lookahead_) match_length = lookahead_;
                if (match_length == MIN_MATCH && strstart_ - match_start_ > TOO_FAR) match_length--;
            }
            if (prev_length_ >= MIN_MATCH && match_length <= prev_length_) {
                flush_flag = ct_tally(strstart_ - 1 - prev_match, prev_length_ - MIN_MATCH);
                lookahead_ -= prev_length_ - 1;
                prev_length_ -= 2;
                rsync_roll_if(strstart_, prev_length_ + 1);
                do {
                    strstart_++;
                    insert_string(strstart_);
                } while (--prev_length_ != 0);
                match_available = false;
                match_length = MIN_MATCH - 1;
                strstart_++;
                if (rsync_boundary()) {
                    rsync_chunk_end_ = NO_CHUNK_END;
                    flush_flag = 2;
                }
                if (flush_flag) {
                    flush(flush_flag, false);
                    block_start_ = strstart_;
                }
            } else if (match_available) {
                flush_flag = ct_tally(0, window_[strstart_ - 1]);
                if (rsync_boundary()) {
                    rsync_chunk_end_ = NO_CHUNK_END;
                    flush_flag = 2;
                }
                if (flush_flag) {
                    flush(flush_flag, false);
                    block_start_ = strstart_;
                }
                rsync_roll_if(strstart_, 1);
                strstart_++;
                lookahead_--;
            } else {
                if (rsync_boundary()) {
                    rsync_chunk_end_ = NO_CHUNK_END;
                    flush_flag = 2;
                    flush(flush_flag, false);
                    block_start_ = strstart_;
                }
                match_available = true;
                rsync_roll_if(strstart_, 1);
                strstart_++;
                lookahead_--;
            }
            while (lookahead_ < MIN_LOOKAHEAD && !eofile_) fill_window();
        }
        if (match_available) ct_tally(0, window_[strstart_ - 1]);
        flush(flush_flag, true);
    }

    // --- output bits ---------------------------------------------------------

    void send_bits(unsigned value, int length)
    {
        bit_buf_ |= static_cast<std::uint64_t>(value) << bit_count_;
        bit_count_ += length;
        bits_sent_ += static_cast<std::uint64_t>(length);
        while (bit_count_ >= 8) {
            out_.push_back(static_cast<std::uint8_t>(bit_buf_));
            bit_buf_ >>= 8;
            bit_count_ -= 8;
        }
    }

    void bi_windup()
    {
        if (bit_count_ > 0) {
            out_.push_back(static_cast<std::uint8_t>(bit_buf_));
            bits_sent_ = (bits_sent_ + 7) & ~std::uint64_t{7};
        }
        bit_buf_ = 0;
        bit_count_ = 0;
    }

    void put_byte(std::uint8_t b)
    {
        out_.push_back(b);
        bits_sent_ += 8;
    }

    void copy_block(const std::uint8_t* buf, unsigned len, bool header)
    {
        bi_windup();
        if (header) {
            put_byte(static_cast<std::uint8_t>(len));
            put_byte(static_cast<std::uint8_t>(len >> 8));
            put_byte(static_cast<std::uint8_t>(~len));
            put_byte(static_cast<std::uint8_t>(~len >> 8));
        }
        for (unsigned i = 0; i < len; ++i) put_byte(buf[i]);
    }

    void send_code(int c, const CtData* tree) { send_bits(tree[c].fc, tree[c].dl); }

    // --- trees ---------------------------------------------------------------

    void init_block()
    {
        for (int n = 0; n < L_CODES; n++) dyn_ltree_[n].fc = 0;
        for (int n = 0; n < D_CODES; n++) dyn_dtree_[n].fc = 0;
        for (int n = 0; n < BL_CODES; n++) bl_tree_[n].fc = 0;
        dyn_ltree_[END_BLOCK].fc = 1;
        opt_len_ = static_len_ = 0;
        last_lit_ = last_dist_ = last_flags_ = 0;
        flags_ = 0;
        flag_bit_ = 1;
    }

    unsigned d_code(unsigned dist) const
    {
        return dist < 256 ? t_.dist_code[dist] : t_.dist_code[256 + (dist >> 7)];
    }

    bool smaller(const CtData* tree, int n, int m) const
    {
        return tree[n].fc < tree[m].fc || (tree[n].fc == tree[m].fc && depth_[n] <= depth_[m]);
    }

    void pqdownheap(const CtData* tree, int k)
    {
        int v = heap_[k];
        int j = k << 1;
        while (j <= heap_len_) {
            if (j < heap_len_ && smaller(tree, heap_[j + 1], heap_[j])) j++;
            if (smaller(tree, v, heap_[j])) break;
            heap_[k] = heap_[j];
            k = j;
            j <<= 1;
        }
        heap_[k] = v;
    }

    void gen_bitlen(TreeDesc& desc)
    {
        CtData* tree = desc.dyn_tree;
        const int* extra = desc.extra_bits;
        int base = desc.extra_base;
        int max_code = desc.max_code;
        int max_length = desc.max_length;
        const CtData* stree = desc.static_tree;
        int h;
        int overflow = 0;

        for (int bits = 0; bits <= MAX_BITS; bits++) bl_count_[bits] = 0;
        tree[heap_[heap_max_]].dl = 0;
        for (h = heap_max_ + 1; h < HEAP_SIZE; h++) {
            int n = heap_[h];
            int bits = tree[tree[n].dl].dl + 1;
            if (bits > max_length) bits = max_length, overflow++;
            tree[n].dl = static_cast<std::uint16_t>(bits);
            if (n > max_code) continue;
            bl_count_[bits]++;
            int xbits = 0;
            if (n >= base) xbits = extra[n - base];
            std::uint64_t f = tree[n].fc;
            opt_len_ += f * static_cast<std::uint64_t>(bits + xbits);
            if (stree) static_len_ += f * static_cast<std::uint64_t>(stree[n].dl + xbits);
        }
        if (overflow == 0) return;
        do {
            int bits = max_length - 1;
            while (bl_count_[bits] == 0) bits--;
            bl_count_[bits]--;
            bl_count_[bits + 1] += 2;
            bl_count_[max_length]--;
            overflow -= 2;
        } while (overflow > 0);
        for (int bits = max_length; bits != 0; bits--) {
            int n = bl_count_[bits];
            while (n != 0) {
                int m = heap_[--h];
                if (m > max_code) continue;
                if (tree[m].dl != static_cast<unsigned>(bits)) {
                    opt_len_ += static_cast<std::uint64_t>(
                        (static_cast<std::int64_t>(bits) - static_cast<std::int64_t>(tree[m].dl)) *
                        static_cast<std::int64_t>(tree[m].fc));
                    tree[m].dl = static_cast<std::uint16_t>(bits);
                }
                n--;
            }
        }
    }

    void gen_codes(CtData* tree, int max_code)
    {
        std::array<std::uint16_t, MAX_BITS + 1> next_code{};
        std::uint16_t code = 0;
        for (int bits = 1; bits <= MAX_BITS; bits++)
            next_code[bits] = code = static_cast<std::uint16_t>((code + bl_count_[bits - 1]) << 1);
        for (int n = 0; n <= max_code; n++) {
            int len = tree[n].dl;
            if (len == 0) continue;
            tree[n].fc = static_cast<std::uint16_t>(bi_reverse(next_code[len]++, len));
        }
    }

    void build_tree(TreeDesc& desc)
    {
        CtData* tree = desc.dyn_tree;
        const CtData* stree = desc.static_tree;
        int elems = desc.elems;
        int max_code = -1;
        int node = elems;

        heap_len_ = 0, heap_max_ = HEAP_SIZE;
        for (int n = 0; n < elems; n++) {
            if (tree[n].fc != 0) {
                heap_[++heap_len_] = max_code = n;
                depth_[n] = 0;
            } else {
                tree[n].dl = 0;
            }
        }
        while (heap_len_ < 2) {
            int nw = heap_[++heap_len_] = (max_code < 2 ? ++max_code : 0);
            tree[nw].fc = 1;
            depth_[nw] = 0;
            opt_len_--;
            if (stree) static_len_ -= stree[nw].dl;
        }
        desc.max_code = max_code;
        for (int n = heap_len_ / 2; n >= 1; n--) pqdownheap(tree, n);
        do {
            int n = heap_[1];
            heap_[1] = heap_[heap_len_--];
            pqdownheap(tree, 1);
            int m = heap_[1];
            heap_[--heap_max_] = n;
            heap_[--heap_max_] = m;
            tree[node].fc = static_cast<std::uint16_t>(tree[n].fc + tree[m].fc);
            depth_[node] = static_cast<std::uint8_t>(std::max(depth_[n], depth_[m]) + 1);
            tree[n].dl = tree[m].dl = static_cast<std::uint16_t>(node);
            heap_[1] = node++;
            pqdownheap(tree, 1);
        } while (heap_len_ >= 2);
        heap_[--heap_max_] = heap_[1];
        gen_bitlen(desc);
        gen_codes(tree, max_code);
    }

    void scan_tree(CtData* tree, int max_code)
    {
        int prevlen = -1;
        int nextlen = tree[0].dl;
        int count = 0;
        int max_count = 7;
        int min_count = 4;
        if (nextlen == 0) max_count = 138, min_count = 3;
        tree[max_code + 1].dl = 0xffff;
        for (int n = 0; n <= max_code; n++) {
            int curlen = nextlen;
            nextlen = tree[n + 1].dl;
            if (++count < max_count && curlen == nextlen) continue;
            else if (count < min_count) bl_tree_[curlen].fc = static_cast<std::uint16_t>(bl_tree_[curlen].fc + count);
            else if (curlen != 0) {
                if (curlen != prevlen) bl_tree_[curlen].fc++;
                bl_tree_[REP_3_6].fc++;
            } else if (count <= 10) bl_tree_[REPZ_3_10].fc++;
            else bl_tree_[REPZ_11_138].fc++;
            count = 0;
            prevlen = curlen;
            if (nextlen == 0) max_count = 138, min_count = 3;
            else if (curlen == nextlen) max_count = 6, min_count = 3;
            else max_count = 7, min_count = 4;
        }
    }

    void send_tree(const CtData* tree, int max_code)
    {
        int prevlen = -1;
        int nextlen = tree[0].dl;
        int count = 0;
        int max_count = 7;
        int min_count = 4;
        if (nextlen == 0) max_count = 138, min_count = 3;
        for (int n = 0; n <= max_code; n++) {
            int curlen = nextlen;
            nextlen = tree[n + 1].dl;
            if (++count < max_count && curlen == nextlen) continue;
            else if (count < min_count) {
                do {
                    send_code(curlen, bl_tree_.data());
                } while (--count != 0);
            } else if (curlen != 0) {
                if (curlen != prevlen) {
                    send_code(curlen, bl_tree_.data());
                    count--;
                }
                send_code(REP_3_6, bl_tree_.data());
                send_bits(static_cast<unsigned>(count - 3), 2);
            } else if (count <= 10) {
                send_code(REPZ_3_10, bl_tree_.data());
                send_bits(static_cast<unsigned>(count - 3), 3);
            } else {
                send_code(REPZ_11_138, bl_tree_.data());
                send_bits(static_cast<unsigned>(count - 11), 7);
            }
            count = 0;
            prevlen = curlen;
            if (nextlen == 0) max_count = 138, min_count = 3;
            else if (curlen == nextlen) max_count = 6, min_count = 3;
            else max_count = 7, min_count = 4;
        }
    }

    int build_bl_tree()
    {
        scan_tree(dyn_ltree_.data(), l_desc_.max_code);
        scan_tree(dyn_dtree_.data(), d_desc_.max_code);
        build_tree(bl_desc_);
        int max_blindex;
        for (max_blindex = BL_CODES - 1; max_blindex >= 3; max_blindex--)
            if (bl_tree_[bl_order[max_blindex]].dl != 0) break;
        opt_len_ += 3 * (static_cast<std::uint64_t>(max_blindex) + 1) + 5 + 5 + 4;
        return max_blindex;
    }

    void send_all_trees(int lcodes, int dcodes, int blcodes)
    {
        send_bits(static_cast<unsigned>(lcodes - 257), 5);
        send_bits(static_cast<unsigned>(dcodes - 1), 5);
        send_bits(static_cast<unsigned>(blcodes - 4), 4);
        for (int rank = 0; rank < blcodes; rank++) send_bits(bl_tree_[bl_order[rank]].dl, 3);
        send_tree(dyn_ltree_.data(), lcodes - 1);
        send_tree(dyn_dtree_.data(), dcodes - 1);
    }

    void compress_block(const CtData* ltree, const CtData* dtree)
    {
        unsigned lx = 0, dx = 0, fx = 0;
        std::uint8_t flag = 0;
        if (last_lit_ != 0) do {
                if ((lx & 7) == 0) flag = flag_buf_[fx++];
                unsigned lc = l_buf_[lx++];
                if ((flag & 1) == 0) {
                    send_code(static_cast<int>(lc), ltree);
                } else {
                    unsigned code = t_.length_code[lc];
                    send_code(static_cast<int>(code + LITERALS + 1), ltree);
                    int extra = extra_lbits[code];
                    if (extra != 0) {
                        lc -= static_cast<unsigned>(t_.base_length[code]);
                        send_bits(lc, extra);
                    }
                    unsigned dist = d_buf_[dx++];
                    code = d_code(dist);
                    send_code(static_cast<int>(code), dtree);
                    extra = extra_dbits[code];
                    if (extra != 0) {
                        dist -= static_cast<unsigned>(t_.base_dist[code]);
                        send_bits(dist, extra);
                    }
                }
                flag >>= 1;
            } while (lx < last_lit_);
        send_code(END_BLOCK, ltree);
    }

    int ct_tally(unsigned dist, unsigned lc)
    {
        l_buf_[last_lit_++] = static_cast<std::uint8_t>(lc);
        if (dist == 0) {
            dyn_ltree_[lc].fc++;
        } else {
            dist--;
            dyn_ltree_[t_.length_code[lc] + LITERALS + 1].fc++;
            dyn_dtree_[d_code(dist)].fc++;
            d_buf_[last_dist_++] = static_cast<std::uint16_t>(dist);
            flags_ |= flag_bit_;
        }
        flag_bit_ = static_cast<std::uint8_t>(flag_bit_ << 1);
        if ((last_lit_ & 7) == 0) {
            flag_buf_[last_flags_++] = flags_;
            flags_ = 0, flag_bit_ = 1;
        }
        if (level_ > 2 && (last_lit_ & 0xfff) == 0) {
            std::uint64_t out_length = static_cast<std::uint64_t>(last_lit_) * 8;
            std::uint64_t in_length = static_cast<std::uint64_t>(static_cast<std::int64_t>(strstart_) - block_start_);
            for (int dcode = 0; dcode < D_CODES; dcode++)
                out_length += static_cast<std::uint64_t>(dyn_dtree_[dcode].fc) * (5 + extra_dbits[dcode]);
            out_length >>= 3;
            if (last_dist_ < last_lit_ / 2 && out_length < in_length / 2) return 1;
        }
        return (last_lit_ == LIT_BUFSIZE - 1 || last_dist_ == DIST_BUFSIZE) ? 1 : 0;
    }

    void flush_block(const std::uint8_t* buf, std::uint64_t stored_len, int pad, bool eof)
    {
        flag_buf_[last_flags_] = flags_;
        build_tree(l_desc_);
        build_tree(d_desc_);
        int max_blindex = build_bl_tree();

        std::uint64_t opt_lenb = (opt_len_ + 3 + 7) >> 3;
        std::uint64_t static_lenb = (static_len_ + 3 + 7) >> 3;
        if (static_lenb <= opt_lenb) opt_lenb = static_lenb;

        if (stored_len + 4 <= opt_lenb && buf != nullptr) {
            send_bits((STORED_BLOCK << 1) + (eof ? 1 : 0), 3);
            copy_block(buf, static_cast<unsigned>(stored_len), true);
        } else if (static_lenb == opt_lenb) {
            send_bits((STATIC_TREES << 1) + (eof ? 1 : 0), 3);
            compress_block(t_.static_ltree.data(), t_.static_dtree.data());
        } else {
            send_bits((DYN_TREES << 1) + (eof ? 1 : 0), 3);
            send_all_trees(l_desc_.max_code + 1, d_desc_.max_code + 1, max_blindex + 1);
            compress_block(dyn_ltree_.data(), dyn_dtree_.data());
        }
        init_block();

        if (eof) {
            bi_windup();
        } else if (pad && (bits_sent_ % 8) != 0) {
            send_bits((STORED_BLOCK << 1) + (eof ? 1 : 0), 3);
            copy_block(buf, 0, true);
        }
        if (expected_) check_prefix(eof);
    }

    void check_prefix(bool eof)
    {
        const auto& e = *expected_;
        if (out_.size() > e.size() || !std::equal(out_.begin(), out_.end(), e.begin()) ||
            (eof && out_.size() != e.size()))
            throw Diverged{};
    }

    ByteView in_;
    std::optional<ByteView> expected_;
    std::size_t in_pos_ = 0;
    int level_;
    bool rsync_;
    const StaticTables& t_;

    std::vector<std::uint8_t> window_;
    std::vector<std::uint16_t> prev_, head_;
    unsigned ins_h_ = 0;
    std::int64_t block_start_ = 0;
    unsigned prev_length_ = 0;
    unsigned strstart_ = 0;
    unsigned match_start_ = 0;
    bool eofile_ = false;
    unsigned lookahead_ = 0;
    unsigned max_chain_length_ = 0, max_lazy_match_ = 0, good_match_ = 0, nice_match_ = 0;
    std::uint64_t rsync_sum_ = 0;
    std::uint64_t rsync_chunk_end_ = NO_CHUNK_END;

    std::array<CtData, HEAP_SIZE> dyn_ltree_{};
    std::array<CtData, 2 * D_CODES + 1> dyn_dtree_{};
    std::array<CtData, 2 * BL_CODES + 1> bl_tree_{};
    TreeDesc l_desc_{}, d_desc_{}, bl_desc_{};
    std::array<std::uint16_t, MAX_BITS + 1> bl_count_{};
    std::array<int, 2 * L_CODES + 1> heap_{};
    int heap_len_ = 0, heap_max_ = 0;
    std::array<std::uint8_t, 2 * L_CODES + 1> depth_{};

    std::vector<std::uint8_t> l_buf_;
    std::vector<std::uint16_t> d_buf_;
    std::vector<std::uint8_t> flag_buf_;
    unsigned last_lit_ = 0, last_dist_ = 0, last_flags_ = 0;
    std::uint8_t flags_ = 0, flag_bit_ = 1;
    std::uint64_t opt_len_ = 0, static_len_ = 0;

    Bytes out_;
    std::uint64_t bit_buf_ = 0;
    int bit_count_ = 0;
    std::uint64_t bits_sent_ = 0;
};

} // namespace

Bytes gnu_deflate(ByteView input, int level, bool rsyncable)
{
    auto d = std::make_unique<GnuDeflate>(input, level, rsyncable);
    return d->run();
}

bool gnu_deflate_reproduces(ByteView input, ByteView expected, int level, bool rsyncable)
{
    auto d = std::make_unique<GnuDeflate>(input, level, rsyncable);
    d->expect(expected);
    try {
        return d->run().size() == expected.size();
    } catch (const Diverged&) {
        return false;
    }
}

} // namespace revive
