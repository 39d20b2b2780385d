#include <array>
#include <string>
#include <vector>

#include "drift/env.hpp"

namespace drift {
namespace {

UINode el(std::optional<std::string> aid, std::string cls, std::string control, const std::string& process,
          std::vector<UINode> children = {}) {
    return UINode{{std::move(aid), std::move(cls), std::move(control), process}, std::move(children)};
}

UINode desktop(UINode window) { return UINode{desktop_properties(), {std::move(window)}}; }

/// Actionable element with an icon child whose ClassName names the glyph and
/// an inert caption. Structure, not only the AutomationID, tells these apart.
UINode glyph_control(const std::string& aid, const std::string& cls, const std::string& control,
                     const std::string& glyph, const std::string& process) {
    return el(aid, cls, control, process,
              {el(std::nullopt, glyph + "Glyph", "Image", process), el(std::nullopt, "TextBlock", "Text", process)});
}

NodeIdentifier id_of(const UINode& n) { return node_identifier(n.props); }

// ---------------------------------------------------------------------------
// Settings

constexpr const char* kSettingsProcess = "SystemSettings";

struct Category {
    std::string name;
    std::vector<std::string> pages;  // first entry is the landing page
    int content_controls;
};

const std::vector<Category>& settings_categories() {
    static const std::vector<Category> categories = {
        {"System", {"Display", "Sound", "Notifications", "FocusAssist", "PowerSleep", "Storage", "Multitasking", "About"}, 5},
        {"Devices", {"Bluetooth", "Printers", "Mouse", "Touchpad", "Typing", "Pen", "AutoPlay"}, 5},
        {"Phone", {"YourPhone", "LinkedPhones", "PhoneApps", "PhonePhotos"}, 4},
        {"Network", {"Status", "WiFi", "Ethernet", "VPN", "Proxy", "MobileHotspot"}, 5},
        {"Personalization", {"Background", "Colors", "LockScreen", "Themes", "Fonts", "Start", "Taskbar"}, 5},
        {"Apps", {"AppsFeatures", "DefaultApps", "OfflineMaps", "StartupApps", "VideoPlayback"}, 4},
        {"Accounts", {"YourInfo", "EmailAccounts", "SignInOptions", "FamilyUsers", "SyncSettings"}, 4},
        {"Time", {"DateTime", "Region", "Language", "Speech"}, 4},
        {"Gaming", {"XboxGameBar", "Captures", "GameMode", "XboxNetworking"}, 4},
        {"Privacy", {"General", "Location", "Camera", "Microphone", "ActivityHistory", "AppPermissions"}, 5},
        {"Update", {"WindowsUpdate", "DeliveryOptimization", "WindowsSecurity", "Backup", "Troubleshoot", "Recovery"}, 5},
    };
    return categories;
}

struct SettingsChrome {
    UINode minimize = el("Minimize", "Button", "Button", kSettingsProcess);
    UINode maximize = el("Maximize", "Button", "Button", kSettingsProcess);
    UINode close = el("Close", "Button", "Button", kSettingsProcess);
    UINode back = glyph_control("BackButton", "Button", "Button", "Back", kSettingsProcess);
    UINode home = glyph_control("HomeButton", "Button", "Button", "Home", kSettingsProcess);

    UINode window(std::vector<UINode> body, bool with_back) const {
        std::vector<UINode> bar = {minimize, maximize, close};
        std::vector<UINode> children;
        children.push_back(el("TitleBar", "ApplicationFrameTitleBarWindow", "TitleBar", kSettingsProcess, std::move(bar)));
        if (with_back) children.push_back(back);
        children.push_back(el("PageContent", "ScrollViewer", "Pane", kSettingsProcess, std::move(body)));
        return desktop(el(std::nullopt, "ApplicationFrameWindow", "Window", kSettingsProcess, std::move(children)));
    }
};

std::vector<UINode> content_controls(const std::string& page, int count) {
    static const std::array<std::pair<const char*, const char*>, 3> kinds = {
        {{"ToggleSwitch", "Button"}, {"HyperlinkButton", "Hyperlink"}, {"Button", "Button"}}};
    std::vector<UINode> out;
    for (int k = 0; k < count; ++k) {
        const auto& [cls, control] = kinds[static_cast<std::size_t>(k) % kinds.size()];
        out.push_back(el(page + "Control" + std::to_string(k), cls, control, kSettingsProcess));
    }
    return out;
}

AppSpec build_settings() {
    const SettingsChrome chrome;
    AppSpec spec;
    spec.name = "settings";
    spec.initial_screen = "home";

    // Home screen.
    std::vector<UINode> tiles;
    for (const auto& c : settings_categories()) {
        tiles.push_back(glyph_control("SettingsPageGroup" + c.name, "GridViewItem", "ListItem", c.name, kSettingsProcess));
    }
    std::vector<UINode> banner = {
        el("ManageAccountLink", "HyperlinkButton", "Hyperlink", kSettingsProcess),
        el("OneDriveLink", "HyperlinkButton", "Hyperlink", kSettingsProcess),
        el("RewardsLink", "HyperlinkButton", "Hyperlink", kSettingsProcess),
        el("WebBrowsingLink", "HyperlinkButton", "Hyperlink", kSettingsProcess),
        el("TipsLink", "HyperlinkButton", "Hyperlink", kSettingsProcess),
    };
    std::vector<UINode> quick = {
        el("QuickUpdate", "Button", "Button", kSettingsProcess),
        el("QuickOneDrive", "Button", "Button", kSettingsProcess),
        el("QuickRewards", "Button", "Button", kSettingsProcess),
        el("FeedbackButton", "Button", "Button", kSettingsProcess),
    };
    std::vector<UINode> home_body = {
        el("PageTitle", "TextBlock", "Text", kSettingsProcess),
        el("SearchBox", "AutoSuggestBox", "Edit", kSettingsProcess),
        el("AccountBanner", "AccountBanner", "Group", kSettingsProcess, banner),
        el("QuickLinks", "QuickLinksPanel", "Group", kSettingsProcess, quick),
        el("CategoryGrid", "GridView", "List", kSettingsProcess, tiles),
    };
    spec.screens["home"] = make_tree(chrome.window(home_body, false));
    for (const auto& c : settings_categories()) {
        spec.transitions[{"home", id_of(glyph_control("SettingsPageGroup" + c.name, "GridViewItem", "ListItem", c.name,
                                                      kSettingsProcess)),
                          ActionType::LeftClick}] = "landing:" + c.name;
    }

    // Category landing pages and their detail pages.
    for (const auto& c : settings_categories()) {
        const std::string landing = "landing:" + c.name;
        std::vector<UINode> nav_items;
        for (const auto& page : c.pages) {
            nav_items.push_back(glyph_control("SettingsPage" + c.name + page, "NavigationViewItem", "ListItem", page,
                                              kSettingsProcess));
        }
        auto body = std::vector<UINode>{
            el("PageTitle", "TextBlock", "Text", kSettingsProcess),
            chrome.home,
            el("NavPane", "NavigationView", "List", kSettingsProcess, nav_items),
        };
        auto content = content_controls(c.name + c.pages.front(), c.content_controls);
        if (c.name == "Devices") {
            content.insert(content.begin(), glyph_control("AddBluetoothButton", "Button", "Button", "AddDevice",
                                                          kSettingsProcess));
        }
        body.push_back(el("ContentFrame", "Frame", "Pane", kSettingsProcess, content));
        spec.screens[landing] = make_tree(chrome.window(body, true));

        for (const auto& screen : {landing}) {
            spec.transitions[{screen, id_of(chrome.back), ActionType::LeftClick}] = "home";
            spec.transitions[{screen, id_of(chrome.home), ActionType::LeftClick}] = "home";
        }
        // Nav items: the landing page's own entry is inert; every other one opens a detail page.
        for (std::size_t k = 1; k < c.pages.size(); ++k) {
            const std::string detail = "page:" + c.name + "/" + c.pages[k];
            const Trigger trigger{landing, id_of(nav_items[k]), ActionType::LeftClick};
            spec.transitions[trigger] = detail;
            if (c.name == "System" && c.pages[k] == "Notifications") spec.events[trigger] = "notifications_panel_opened";

            auto detail_body = std::vector<UINode>{
                el("PageTitle", "TextBlock", "Text", kSettingsProcess),
                chrome.home,
                el("ContentFrame", "Frame", "Pane", kSettingsProcess, content_controls(c.name + c.pages[k], 4)),
            };
            spec.screens[detail] = make_tree(chrome.window(detail_body, true));
            spec.transitions[{detail, id_of(chrome.back), ActionType::LeftClick}] = landing;
            spec.transitions[{detail, id_of(chrome.home), ActionType::LeftClick}] = "home";
        }
    }

    // Add-device dialog opened by the Bluetooth button.
    const UINode cancel = el("CancelButton", "Button", "Button", kSettingsProcess);
    const UINode done = el("DoneButton", "Button", "Button", kSettingsProcess);
    auto dialog = chrome.window(
        {el("AddDeviceDialog", "ContentDialog", "Window", kSettingsProcess,
            {el("DialogTitle", "TextBlock", "Text", kSettingsProcess),
             el("BluetoothOption", "Button", "Button", kSettingsProcess),
             el("DisplayDockOption", "Button", "Button", kSettingsProcess),
             el("EverythingElseOption", "Button", "Button", kSettingsProcess), cancel, done})},
        false);
    spec.screens["dialog:AddDevice"] = make_tree(dialog);
    const Trigger add_bluetooth{"landing:Devices",
                                id_of(glyph_control("AddBluetoothButton", "Button", "Button", "AddDevice", kSettingsProcess)),
                                ActionType::LeftClick};
    spec.transitions[add_bluetooth] = "dialog:AddDevice";
    spec.events[add_bluetooth] = "add_bluetooth_clicked";
    spec.transitions[{"dialog:AddDevice", id_of(cancel), ActionType::LeftClick}] = "landing:Devices";
    spec.transitions[{"dialog:AddDevice", id_of(done), ActionType::LeftClick}] = "landing:Devices";
    return spec;
}

// ---------------------------------------------------------------------------
// Browser

constexpr const char* kBrowserProcess = "msedge";

struct WebPage {
    std::string name;
    std::vector<std::string> links;  // link targets, by page name
};

const std::vector<WebPage>& web_pages() {
    static const std::vector<WebPage> pages = {
        {"Start", {"News", "Weather", "Sports", "Shopping", "Video", "Start"}},
        {"News", {"Start", "Weather", "Sports", "News", "Video", "Shopping"}},
        {"Weather", {"Start", "News", "Weather", "Sports", "Video", "Shopping"}},
        {"Sports", {"Start", "News", "Video", "Sports", "Weather", "Shopping"}},
        {"Shopping", {"Start", "News", "Shopping", "Video", "Weather", "Sports"}},
        {"Video", {"Start", "Video", "News", "Sports", "Weather", "Shopping"}},
    };
    return pages;
}

const std::vector<std::string>& menu_entries() {
    static const std::vector<std::string> entries = {
        "NewTab",   "NewWindow", "InPrivate",  "Zoom",  "Favorites", "AddToFavorites", "Collections",
        "History",  "Downloads", "Extensions", "Print", "Share",     "FindOnPage",     "MoreTools",
    };
    return entries;
}

AppSpec build_browser() {
    AppSpec spec;
    spec.name = "browser";
    spec.initial_screen = "page:Start";

    const auto p = kBrowserProcess;
    const UINode minimize = el("Minimize", "Button", "Button", p);
    const UINode maximize = el("Maximize", "Button", "Button", p);
    const UINode close = el("Close", "Button", "Button", p);
    const UINode back = glyph_control("BackButton", "ToolbarButton", "Button", "Back", p);
    const UINode forward = glyph_control("ForwardButton", "ToolbarButton", "Button", "Forward", p);
    const UINode reload = glyph_control("ReloadButton", "ToolbarButton", "Button", "Reload", p);
    const UINode home = glyph_control("HomeButton", "ToolbarButton", "Button", "Home", p);
    const UINode favorites = glyph_control("FavoritesButton", "ToolbarButton", "Button", "FavoritesHub", p);
    const UINode collections = glyph_control("CollectionsButton", "ToolbarButton", "Button", "Collections", p);
    const UINode menu_button = glyph_control("SettingsAndMoreButton", "BrowserAppMenuButton", "Button", "More", p);

    auto tabs = std::vector<UINode>{el("Tab0", "Tab", "TabItem", p), el("Tab1", "Tab", "TabItem", p),
                                    el("Tab2", "Tab", "TabItem", p), el("NewTabButton", "NewTabButton", "Button", p)};

    std::vector<UINode> menu_items;
    for (const auto& entry : menu_entries()) {
        menu_items.push_back(glyph_control(entry + "MenuItem", "MenuItemView", "MenuItem", entry, p));
    }

    auto page_links = [&](const WebPage& page) {
        std::vector<UINode> links;
        for (std::size_t k = 0; k < page.links.size(); ++k) {
            links.push_back(el(page.name + "Link" + std::to_string(k), "Hyperlink", "Hyperlink", p));
        }
        return links;
    };
    auto window = [&](const WebPage& page, bool menu_open) {
        std::vector<UINode> children = {
            el("TitleBar", "BrowserTitleBar", "TitleBar", p, {minimize, maximize, close}),
            el("TabStrip", "TabStripRegionView", "Tab", p, tabs),
            el("Toolbar", "ToolbarView", "ToolBar", p,
               {back, forward, reload, home, el("AddressBar", "OmniboxViewViews", "Edit", p), favorites, collections,
                menu_button}),
            el("WebContent", "Chrome_RenderWidgetHostHWND", "Document", p,
               {el(page.name + "Heading", "Heading", "Text", p), el(page.name + "Links", "LinkList", "Group", p, page_links(page))}),
        };
        if (menu_open) children.push_back(el("AppMenu", "MenuView", "Menu", p, menu_items));
        return desktop(el(std::nullopt, "Chrome_WidgetWin_1", "Window", p, std::move(children)));
    };

    for (const auto& page : web_pages()) {
        const std::string closed = "page:" + page.name;
        const std::string open = "menu:" + page.name;
        spec.screens[closed] = make_tree(window(page, false));
        spec.screens[open] = make_tree(window(page, true));

        auto links = page_links(page);
        for (const std::string& screen : {closed, open}) {
            for (std::size_t k = 0; k < links.size(); ++k) {
                spec.transitions[{screen, id_of(links[k]), ActionType::LeftClick}] = "page:" + page.links[k];
            }
            spec.transitions[{screen, id_of(home), ActionType::LeftClick}] = "page:Start";
        }
        spec.transitions[{closed, id_of(menu_button), ActionType::LeftClick}] = open;
        spec.transitions[{open, id_of(menu_button), ActionType::LeftClick}] = closed;
        // Any other click while the menu is open dismisses it.
        for (const auto& inert : {minimize, maximize, close, back, forward, reload, favorites, collections}) {
            spec.transitions[{open, id_of(inert), ActionType::LeftClick}] = closed;
        }
        for (const auto& tab : tabs) spec.transitions[{open, id_of(tab), ActionType::LeftClick}] = closed;
        for (std::size_t k = 0; k < menu_items.size(); ++k) {
            const Trigger trigger{open, id_of(menu_items[k]), ActionType::LeftClick};
            spec.transitions[trigger] = closed;
            if (menu_entries()[k] == "AddToFavorites") spec.events[trigger] = "favorite_added";
        }
    }
    return spec;
}

AppSpec perturbed(AppSpec spec, std::uint64_t seed) {
    spec.name += "_perturbed";
    spec.perturbation_seed = seed;
    return spec;
}

}  // namespace

std::vector<AppSpec> list_builtin_apps() {
    static const std::vector<AppSpec> apps = [] {
        std::vector<AppSpec> out;
        out.push_back(build_settings());
        out.push_back(build_browser());
        out.push_back(perturbed(out[0], 0x5e771e65));
        out.push_back(perturbed(out[1], 0xb4053e42));
        for (const auto& a : out) a.validate();
        return out;
    }();
    return apps;
}

}  // namespace drift
