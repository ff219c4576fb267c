import { ApiClient } from "./api.js";
import { createApp } from "./app.js";

const app = createApp(document, new ApiClient());
app.start();
void app.refreshLeaderboard();
