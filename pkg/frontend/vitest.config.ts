import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    exclude: process.env.RUN_E2E ? [] : ["tests/e2e.test.ts", "**/node_modules/**"],
  },
});
