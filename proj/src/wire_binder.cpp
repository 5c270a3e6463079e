#include "droidaudit/wire_binder.hpp"

#include <string>

#include "droidaudit/error.hpp"
#include "droidaudit/pipeline.hpp"

namespace droidaudit::binder {

std::optional<std::string_view> command_name(std::uint32_t code) {
  switch (code) {
    case BC_TRANSACTION: return "BC_TRANSACTION";
    case BC_REPLY: return "BC_REPLY";
    case BC_ACQUIRE_RESULT: return "BC_ACQUIRE_RESULT";
    case BC_FREE_BUFFER: return "BC_FREE_BUFFER";
    case BC_INCREFS: return "BC_INCREFS";
    case BC_ACQUIRE: return "BC_ACQUIRE";
    case BC_RELEASE: return "BC_RELEASE";
    case BC_DECREFS: return "BC_DECREFS";
    case BC_INCREFS_DONE: return "BC_INCREFS_DONE";
    case BC_ACQUIRE_DONE: return "BC_ACQUIRE_DONE";
    case BC_ATTEMPT_ACQUIRE: return "BC_ATTEMPT_ACQUIRE";
    case BC_REGISTER_LOOPER: return "BC_REGISTER_LOOPER";
    case BC_ENTER_LOOPER: return "BC_ENTER_LOOPER";
    case BC_EXIT_LOOPER: return "BC_EXIT_LOOPER";
    case BC_REQUEST_DEATH_NOTIFICATION: return "BC_REQUEST_DEATH_NOTIFICATION";
    case BC_CLEAR_DEATH_NOTIFICATION: return "BC_CLEAR_DEATH_NOTIFICATION";
    case BC_DEAD_BINDER_DONE: return "BC_DEAD_BINDER_DONE";
    case BC_TRANSACTION_SG: return "BC_TRANSACTION_SG";
    case BC_REPLY_SG: return "BC_REPLY_SG";
    default: return std::nullopt;
  }
}

BinderWriteRead parse_write_read(ByteView bytes) {
  if (bytes.size() < kWriteReadSize) {
    throw Error(ErrorCode::TruncatedInput,
                "binder_write_read needs 48 bytes, got " + std::to_string(bytes.size()));
  }
  BinderWriteRead bwr;
  bwr.write_size = load_le<std::uint64_t>(bytes, 0);
  bwr.write_consumed = load_le<std::uint64_t>(bytes, 8);
  bwr.write_buffer = load_le<std::uint64_t>(bytes, 16);
  bwr.read_size = load_le<std::uint64_t>(bytes, 24);
  bwr.read_consumed = load_le<std::uint64_t>(bytes, 32);
  bwr.read_buffer = load_le<std::uint64_t>(bytes, 40);
  return bwr;
}

Bytes serialize(const BinderWriteRead& bwr) {
  Bytes out;
  out.reserve(kWriteReadSize);
  store_le(out, bwr.write_size);
  store_le(out, bwr.write_consumed);
  store_le(out, bwr.write_buffer);
  store_le(out, bwr.read_size);
  store_le(out, bwr.read_consumed);
  store_le(out, bwr.read_buffer);
  return out;
}

CommandStream iterate_commands(ByteView write_buffer) {
  CommandStream stream;
  std::size_t pos = 0;
  while (pos < write_buffer.size()) {
    if (write_buffer.size() - pos < 4) {
      stream.truncated_at = pos;
      break;
    }
    const auto code = load_le<std::uint32_t>(write_buffer, pos);
    const std::size_t size = ioc_size(code);
    if (write_buffer.size() - pos - 4 < size) {
      stream.truncated_at = pos;
      break;
    }
    BinderCommand cmd;
    cmd.code = code;
    cmd.offset = pos;
    cmd.known = command_name(code).has_value();
    auto first = write_buffer.begin() + static_cast<std::ptrdiff_t>(pos + 4);
    cmd.payload.assign(first, first + static_cast<std::ptrdiff_t>(size));
    stream.commands.push_back(std::move(cmd));
    pos += 4 + size;
  }
  stream.consumed = pos;
  return stream;
}

TransactionData parse_transaction_data(ByteView payload) {
  if (payload.size() != kTransactionDataSize) {
    throw Error(ErrorCode::BadPayloadSize,
                "binder_transaction_data is 64 bytes, got " + std::to_string(payload.size()));
  }
  TransactionData t;
  t.target = load_le<std::uint64_t>(payload, 0);
  t.cookie = load_le<std::uint64_t>(payload, 8);
  t.code = load_le<std::uint32_t>(payload, 16);
  t.flags = load_le<std::uint32_t>(payload, 20);
  t.sender_pid = load_le<std::int32_t>(payload, 24);
  t.sender_euid = load_le<std::uint32_t>(payload, 28);
  t.data_size = load_le<std::uint64_t>(payload, 32);
  t.offsets_size = load_le<std::uint64_t>(payload, 40);
  t.buffer_ptr = load_le<std::uint64_t>(payload, 48);
  t.offsets_ptr = load_le<std::uint64_t>(payload, 56);
  return t;
}

Bytes serialize(const TransactionData& t) {
  Bytes out;
  out.reserve(kTransactionDataSize);
  store_le(out, t.target);
  store_le(out, t.cookie);
  store_le(out, t.code);
  store_le(out, t.flags);
  store_le(out, t.sender_pid);
  store_le(out, t.sender_euid);
  store_le(out, t.data_size);
  store_le(out, t.offsets_size);
  store_le(out, t.buffer_ptr);
  store_le(out, t.offsets_ptr);
  return out;
}

void MemoryMap::add(std::uint64_t address, Bytes bytes) {
  regions_[pipeline::mask_user_address(address)] = std::move(bytes);
}

std::optional<Bytes> MemoryMap::read(std::uint64_t address, std::uint64_t length) const {
  const auto addr = pipeline::mask_user_address(address);
  if (length == 0) return Bytes{};
  auto it = regions_.upper_bound(addr);
  if (it == regions_.begin()) return std::nullopt;
  --it;
  const auto offset = addr - it->first;
  if (offset > it->second.size() || it->second.size() - offset < length) return std::nullopt;
  auto first = it->second.begin() + static_cast<std::ptrdiff_t>(offset);
  return Bytes(first, first + static_cast<std::ptrdiff_t>(length));
}

DataResolver MemoryMap::resolver() const {
  return [this](std::uint64_t address, std::uint64_t length) { return read(address, length); };
}

TransactionRecord extract_transaction(const BinderCommand& cmd, const DataResolver& resolver) {
  if (cmd.code != BC_TRANSACTION) {
    throw Error(ErrorCode::MalformedTransaction, "command is not BC_TRANSACTION");
  }
  const auto data = parse_transaction_data(cmd.payload);
  if (data.offsets_size % 8 != 0) {
    throw Error(ErrorCode::MalformedTransaction,
                "offsets_size " + std::to_string(data.offsets_size) + " is not a multiple of 8");
  }
  TransactionRecord rec;
  rec.target_handle = static_cast<std::uint32_t>(data.target);
  rec.cookie = data.cookie;
  rec.code = data.code;
  rec.flags = data.flags;
  rec.sender_pid = data.sender_pid;
  rec.sender_euid = data.sender_euid;
  rec.data_size = data.data_size;
  rec.offsets_size = data.offsets_size;
  if (data.data_size > 0) {
    auto buffer = resolver ? resolver(data.buffer_ptr, data.data_size) : std::nullopt;
    if (!buffer || buffer->size() != data.data_size) {
      throw Error(ErrorCode::UnresolvableData,
                  "cannot resolve " + std::to_string(data.data_size) + " data bytes");
    }
    rec.buffer = std::move(*buffer);
  }
  if (data.offsets_size > 0) {
    auto offsets = resolver ? resolver(data.offsets_ptr, data.offsets_size) : std::nullopt;
    if (!offsets || offsets->size() != data.offsets_size) {
      throw Error(ErrorCode::UnresolvableData,
                  "cannot resolve " + std::to_string(data.offsets_size) + " offset bytes");
    }
    rec.offsets = std::move(*offsets);
  }
  return rec;
}

}  // namespace droidaudit::binder
