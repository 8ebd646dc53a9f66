import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // The e2e spec boots the real session service.
    testTimeout: 30_000,
    hookTimeout: 30_000,
  },
});
