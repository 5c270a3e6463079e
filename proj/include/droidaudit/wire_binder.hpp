#pragma once

// Byte layout of the Binder BINDER_WRITE_READ ioctl argument and the
// command stream carried in its write buffer. 64-bit little-endian only.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "droidaudit/bytes.hpp"

namespace droidaudit::binder {

// Linux ioctl request encoding: nr bits 0-7, type bits 8-15, size bits 16-29, dir bits 30-31.
inline constexpr std::uint32_t kIocNone = 0;
inline constexpr std::uint32_t kIocWrite = 1;
inline constexpr std::uint32_t kIocRead = 2;

constexpr std::uint32_t ioc(std::uint32_t dir, char type, std::uint32_t nr, std::uint32_t size) {
  return (dir << 30) | ((size & 0x3fff) << 16) | (static_cast<std::uint32_t>(type) << 8) | nr;
}
constexpr std::uint32_t io(char type, std::uint32_t nr) { return ioc(kIocNone, type, nr, 0); }
constexpr std::uint32_t iow(char type, std::uint32_t nr, std::uint32_t size) {
  return ioc(kIocWrite, type, nr, size);
}
constexpr std::uint32_t iowr(char type, std::uint32_t nr, std::uint32_t size) {
  return ioc(kIocWrite | kIocRead, type, nr, size);
}

constexpr std::uint32_t ioc_dir(std::uint32_t code) { return code >> 30; }
constexpr std::uint32_t ioc_size(std::uint32_t code) { return (code >> 16) & 0x3fff; }
constexpr char ioc_type(std::uint32_t code) { return static_cast<char>((code >> 8) & 0xff); }
constexpr std::uint32_t ioc_nr(std::uint32_t code) { return code & 0xff; }

inline constexpr std::size_t kWriteReadSize = 48;
inline constexpr std::size_t kTransactionDataSize = 64;
inline constexpr std::size_t kTransactionDataSgSize = 72;

inline constexpr std::uint32_t BINDER_WRITE_READ = iowr('b', 1, kWriteReadSize);

// Binder driver commands (BC_*), sizes from the UAPI struct layouts on arm64.
inline constexpr std::uint32_t BC_TRANSACTION = iow('c', 0, kTransactionDataSize);
inline constexpr std::uint32_t BC_REPLY = iow('c', 1, kTransactionDataSize);
inline constexpr std::uint32_t BC_ACQUIRE_RESULT = iow('c', 2, 4);
inline constexpr std::uint32_t BC_FREE_BUFFER = iow('c', 3, 8);
inline constexpr std::uint32_t BC_INCREFS = iow('c', 4, 4);
inline constexpr std::uint32_t BC_ACQUIRE = iow('c', 5, 4);
inline constexpr std::uint32_t BC_RELEASE = iow('c', 6, 4);
inline constexpr std::uint32_t BC_DECREFS = iow('c', 7, 4);
inline constexpr std::uint32_t BC_INCREFS_DONE = iow('c', 8, 16);
inline constexpr std::uint32_t BC_ACQUIRE_DONE = iow('c', 9, 16);
inline constexpr std::uint32_t BC_ATTEMPT_ACQUIRE = iow('c', 10, 8);
inline constexpr std::uint32_t BC_REGISTER_LOOPER = io('c', 11);
inline constexpr std::uint32_t BC_ENTER_LOOPER = io('c', 12);
inline constexpr std::uint32_t BC_EXIT_LOOPER = io('c', 13);
inline constexpr std::uint32_t BC_REQUEST_DEATH_NOTIFICATION = iow('c', 14, 12);
inline constexpr std::uint32_t BC_CLEAR_DEATH_NOTIFICATION = iow('c', 15, 12);
inline constexpr std::uint32_t BC_DEAD_BINDER_DONE = iow('c', 16, 8);
inline constexpr std::uint32_t BC_TRANSACTION_SG = iow('c', 17, kTransactionDataSgSize);
inline constexpr std::uint32_t BC_REPLY_SG = iow('c', 18, kTransactionDataSgSize);

// Name of a known BC_* command, or nullopt.
std::optional<std::string_view> command_name(std::uint32_t code);

struct BinderWriteRead {
  std::uint64_t write_size = 0;
  std::uint64_t write_consumed = 0;
  std::uint64_t write_buffer = 0;
  std::uint64_t read_size = 0;
  std::uint64_t read_consumed = 0;
  std::uint64_t read_buffer = 0;

  bool operator==(const BinderWriteRead&) const = default;
};

BinderWriteRead parse_write_read(ByteView bytes);
Bytes serialize(const BinderWriteRead& bwr);

struct BinderCommand {
  std::uint32_t code = 0;
  Bytes payload;
  std::size_t offset = 0;  // position of the command word in the write buffer
  bool known = false;
};

struct CommandStream {
  std::vector<BinderCommand> commands;
  std::size_t consumed = 0;
  // Set when a command declared more payload than the buffer holds; iteration stopped there.
  std::optional<std::size_t> truncated_at;
};

CommandStream iterate_commands(ByteView write_buffer);

// binder_transaction_data as it sits in a BC_TRANSACTION payload.
struct TransactionData {
  std::uint64_t target = 0;  // handle (low 32 bits) or local pointer
  std::uint64_t cookie = 0;
  std::uint32_t code = 0;
  std::uint32_t flags = 0;
  std::int32_t sender_pid = 0;
  std::uint32_t sender_euid = 0;
  std::uint64_t data_size = 0;
  std::uint64_t offsets_size = 0;
  std::uint64_t buffer_ptr = 0;
  std::uint64_t offsets_ptr = 0;

  bool operator==(const TransactionData&) const = default;
};

TransactionData parse_transaction_data(ByteView payload);
Bytes serialize(const TransactionData& txn);

struct TransactionRecord {
  std::uint32_t target_handle = 0;
  std::uint64_t cookie = 0;
  std::uint32_t code = 0;
  std::uint32_t flags = 0;
  std::int32_t sender_pid = 0;
  std::uint32_t sender_euid = 0;
  std::uint64_t data_size = 0;
  std::uint64_t offsets_size = 0;
  Bytes buffer;
  Bytes offsets;
};

// Supplies `length` bytes of captured user memory at `address`, or nullopt.
using DataResolver = std::function<std::optional<Bytes>(std::uint64_t address, std::uint64_t length)>;

// Replay-mode resolver over captured memory regions. Addresses are compared
// after MTE tag stripping, so tagged and untagged pointers resolve alike.
class MemoryMap {
 public:
  void add(std::uint64_t address, Bytes bytes);
  std::optional<Bytes> read(std::uint64_t address, std::uint64_t length) const;
  DataResolver resolver() const;

 private:
  std::map<std::uint64_t, Bytes> regions_;
};

TransactionRecord extract_transaction(const BinderCommand& cmd, const DataResolver& resolver);

}  // namespace droidaudit::binder
