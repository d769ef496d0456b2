// Least-recently-used map with fixed capacity; lookups refresh recency.
#pragma once

#include <cstddef>
#include <list>
#include <unordered_map>

template <typename K, typename V>
class LruCache {
public:
    explicit LruCache(std::size_t capacity) : capacity_(capacity) {}

    /*@expect:func_body*/
    bool put(const K &key, const V &value) {
        auto it = index_.find(key);
        if (it != index_.end()) {
            it->second->second = value;
            touch(it->second);
            return false;
        }
        order_.emplace_front(key, value);
        index_[key] = order_.begin();
        if (order_.size() > capacity_) {
            index_.erase(order_.back().first);
            order_.pop_back();
        }
        return true;
    }

    const V *get(const K &key) {
        auto it = index_.find(key);
        if (it == index_.end()) {
            return nullptr;
        }
        touch(it->second);
        return &it->second->second;
    }

private:
    using Entry = std::pair<K, V>;

    void touch(typename std::list<Entry>::iterator it) {
        order_.splice(order_.begin(), order_, it);
    }

    std::list<Entry> order_;
    std::unordered_map<K, typename std::list<Entry>::iterator> index_;
    std::size_t capacity_;
};
