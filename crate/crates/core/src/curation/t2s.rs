//! Traditional → simplified Chinese character pairs.
//!
//! A hand-curated table of common one-to-one mappings. Full conversion
//! dictionaries are a data dependency, not code; this embedded sample
//! covers everyday vocabulary and is what the conversion mapper ships
//! with. The table must stay acyclic — no simplified output may itself
//! appear as a traditional key — so that conversion is idempotent; a test
//! enforces this.

pub(crate) const T2S_PAIRS: &[(char, char)] = &[
    ('萬', '万'),
    ('與', '与'),
    ('專', '专'),
    ('業', '业'),
    ('東', '东'),
    ('絲', '丝'),
    ('兩', '两'),
    ('嚴', '严'),
    ('喪', '丧'),
    ('個', '个'),
    ('豐', '丰'),
    ('臨', '临'),
    ('為', '为'),
    ('麗', '丽'),
    ('舉', '举'),
    ('義', '义'),
    ('樂', '乐'),
    ('習', '习'),
    ('鄉', '乡'),
    ('書', '书'),
    ('買', '买'),
    ('亂', '乱'),
    ('爭', '争'),
    ('虧', '亏'),
    ('雲', '云'),
    ('亞', '亚'),
    ('產', '产'),
    ('親', '亲'),
    ('億', '亿'),
    ('僅', '仅'),
    ('從', '从'),
    ('倉', '仓'),
    ('儀', '仪'),
    ('們', '们'),
    ('價', '价'),
    ('眾', '众'),
    ('優', '优'),
    ('會', '会'),
    ('傷', '伤'),
    ('倫', '伦'),
    ('偽', '伪'),
    ('體', '体'),
    ('餘', '余'),
    ('傑', '杰'),
    ('備', '备'),
    ('傳', '传'),
    ('債', '债'),
    ('僑', '侨'),
    ('儘', '尽'),
    ('兒', '儿'),
    ('黨', '党'),
    ('蘭', '兰'),
    ('關', '关'),
    ('興', '兴'),
    ('養', '养'),
    ('獸', '兽'),
    ('內', '内'),
    ('岡', '冈'),
    ('冊', '册'),
    ('寫', '写'),
    ('軍', '军'),
    ('農', '农'),
    ('馮', '冯'),
    ('沖', '冲'),
    ('決', '决'),
    ('況', '况'),
    ('凍', '冻'),
    ('淨', '净'),
    ('涼', '凉'),
    ('減', '减'),
    ('凜', '凛'),
    ('幾', '几'),
    ('鳳', '凤'),
    ('劉', '刘'),
    ('則', '则'),
    ('剛', '刚'),
    ('創', '创'),
    ('刪', '删'),
    ('別', '别'),
    ('劇', '剧'),
    ('劍', '剑'),
    ('劑', '剂'),
    ('勸', '劝'),
    ('辦', '办'),
    ('務', '务'),
    ('動', '动'),
    ('勵', '励'),
    ('勞', '劳'),
    ('勢', '势'),
    ('匯', '汇'),
    ('區', '区'),
    ('醫', '医'),
    ('華', '华'),
    ('協', '协'),
    ('單', '单'),
    ('賣', '卖'),
    ('盧', '卢'),
    ('衛', '卫'),
    ('廠', '厂'),
    ('廳', '厅'),
    ('歷', '历'),
    ('厲', '厉'),
    ('壓', '压'),
    ('厭', '厌'),
    ('縣', '县'),
    ('參', '参'),
    ('雙', '双'),
    ('發', '发'),
    ('變', '变'),
    ('疊', '叠'),
    ('葉', '叶'),
    ('號', '号'),
    ('嘆', '叹'),
    ('嗎', '吗'),
    ('聽', '听'),
    ('啟', '启'),
    ('吳', '吴'),
    ('員', '员'),
    ('嗚', '呜'),
    ('響', '响'),
    ('啞', '哑'),
    ('噸', '吨'),
    ('鄰', '邻'),
    ('喚', '唤'),
    ('問', '问'),
    ('喬', '乔'),
    ('嘗', '尝'),
    ('噴', '喷'),
    ('嚇', '吓'),
    ('囑', '嘱'),
    ('團', '团'),
    ('園', '园'),
    ('圍', '围'),
    ('國', '国'),
    ('圖', '图'),
    ('圓', '圆'),
    ('聖', '圣'),
    ('場', '场'),
    ('壞', '坏'),
    ('塊', '块'),
    ('堅', '坚'),
    ('壇', '坛'),
    ('報', '报'),
    ('墊', '垫'),
    ('墳', '坟'),
    ('壩', '坝'),
    ('聲', '声'),
    ('殼', '壳'),
    ('處', '处'),
    ('複', '复'),
    ('夠', '够'),
    ('頭', '头'),
    ('誇', '夸'),
    ('奪', '夺'),
    ('奮', '奋'),
    ('婦', '妇'),
    ('媽', '妈'),
    ('嬰', '婴'),
    ('嬌', '娇'),
    ('孫', '孙'),
    ('學', '学'),
    ('寧', '宁'),
    ('寶', '宝'),
    ('實', '实'),
    ('審', '审'),
    ('憲', '宪'),
    ('宮', '宫'),
    ('寬', '宽'),
    ('賓', '宾'),
    ('寢', '寝'),
    ('對', '对'),
    ('尋', '寻'),
    ('導', '导'),
    ('壽', '寿'),
    ('將', '将'),
    ('爾', '尔'),
    ('塵', '尘'),
    ('輝', '辉'),
    ('點', '点'),
    ('層', '层'),
    ('屆', '届'),
    ('屬', '属'),
    ('歲', '岁'),
    ('豈', '岂'),
    ('峽', '峡'),
    ('島', '岛'),
    ('嶺', '岭'),
    ('崗', '岗'),
    ('帥', '帅'),
    ('師', '师'),
    ('幫', '帮'),
    ('帶', '带'),
    ('幣', '币'),
    ('幟', '帜'),
    ('幹', '干'),
    ('廣', '广'),
    ('莊', '庄'),
    ('慶', '庆'),
    ('廬', '庐'),
    ('廟', '庙'),
    ('龐', '庞'),
    ('廢', '废'),
    ('開', '开'),
    ('異', '异'),
    ('棄', '弃'),
    ('張', '张'),
    ('彌', '弥'),
    ('彎', '弯'),
    ('歸', '归'),
    ('當', '当'),
    ('錄', '录'),
    ('彥', '彦'),
    ('徹', '彻'),
    ('徑', '径'),
    ('後', '后'),
    ('憶', '忆'),
    ('懷', '怀'),
    ('態', '态'),
    ('憤', '愤'),
    ('應', '应'),
    ('愛', '爱'),
    ('憑', '凭'),
    ('戀', '恋'),
    ('戰', '战'),
    ('戲', '戏'),
    ('戶', '户'),
    ('擺', '摆'),
    ('執', '执'),
    ('擴', '扩'),
    ('掃', '扫'),
    ('揚', '扬'),
    ('擾', '扰'),
    ('撫', '抚'),
    ('擁', '拥'),
    ('擋', '挡'),
    ('護', '护'),
    ('擔', '担'),
    ('據', '据'),
    ('揮', '挥'),
    ('損', '损'),
    ('撿', '捡'),
    ('換', '换'),
    ('搗', '捣'),
    ('攝', '摄'),
    ('攜', '携'),
    ('搖', '摇'),
    ('敵', '敌'),
    ('數', '数'),
    ('齊', '齐'),
    ('斬', '斩'),
    ('斷', '断'),
    ('無', '无'),
    ('舊', '旧'),
    ('時', '时'),
    ('曠', '旷'),
    ('晝', '昼'),
    ('顯', '显'),
    ('晉', '晋'),
    ('曬', '晒'),
    ('機', '机'),
    ('殺', '杀'),
    ('雜', '杂'),
    ('權', '权'),
    ('條', '条'),
    ('來', '来'),
    ('楊', '杨'),
    ('標', '标'),
    ('榮', '荣'),
    ('構', '构'),
    ('樣', '样'),
    ('檢', '检'),
    ('橫', '横'),
    ('檔', '档'),
    ('櫃', '柜'),
    ('樹', '树'),
    ('橋', '桥'),
    ('歡', '欢'),
    ('歐', '欧'),
    ('欽', '钦'),
    ('殘', '残'),
    ('殲', '歼'),
    ('毆', '殴'),
    ('毀', '毁'),
    ('氣', '气'),
    ('氫', '氢'),
    ('漢', '汉'),
    ('滿', '满'),
    ('濟', '济'),
    ('洶', '汹'),
    ('淺', '浅'),
    ('測', '测'),
    ('渾', '浑'),
    ('湯', '汤'),
    ('溫', '温'),
    ('濕', '湿'),
    ('潔', '洁'),
    ('澤', '泽'),
    ('濃', '浓'),
    ('濤', '涛'),
    ('灣', '湾'),
    ('滅', '灭'),
    ('燈', '灯'),
    ('爐', '炉'),
    ('煉', '炼'),
    ('煩', '烦'),
    ('燒', '烧'),
    ('熱', '热'),
    ('爺', '爷'),
    ('牆', '墙'),
    ('牽', '牵'),
    ('犧', '牺'),
    ('狀', '状'),
    ('獨', '独'),
    ('獲', '获'),
    ('獻', '献'),
    ('現', '现'),
    ('瑪', '玛'),
    ('環', '环'),
    ('電', '电'),
    ('畫', '画'),
    ('療', '疗'),
    ('瘋', '疯'),
    ('癢', '痒'),
    ('監', '监'),
    ('盤', '盘'),
    ('盜', '盗'),
    ('睜', '睁'),
    ('瞞', '瞒'),
    ('礦', '矿'),
    ('碼', '码'),
    ('磚', '砖'),
    ('礎', '础'),
    ('禍', '祸'),
    ('禮', '礼'),
    ('種', '种'),
    ('稱', '称'),
    ('穀', '谷'),
    ('積', '积'),
    ('穩', '稳'),
    ('窮', '穷'),
    ('竊', '窃'),
    ('競', '竞'),
    ('筆', '笔'),
    ('筍', '笋'),
    ('築', '筑'),
    ('簡', '简'),
    ('簽', '签'),
    ('籃', '篮'),
    ('籌', '筹'),
    ('籠', '笼'),
    ('類', '类'),
    ('糧', '粮'),
    ('緊', '紧'),
    ('紅', '红'),
    ('紀', '纪'),
    ('純', '纯'),
    ('紙', '纸'),
    ('級', '级'),
    ('紛', '纷'),
    ('組', '组'),
    ('結', '结'),
    ('絡', '络'),
    ('給', '给'),
    ('統', '统'),
    ('經', '经'),
    ('綜', '综'),
    ('綠', '绿'),
    ('維', '维'),
    ('網', '网'),
    ('綱', '纲'),
    ('緒', '绪'),
    ('線', '线'),
    ('緣', '缘'),
    ('編', '编'),
    ('緩', '缓'),
    ('縮', '缩'),
    ('織', '织'),
    ('繞', '绕'),
    ('繪', '绘'),
    ('繩', '绳'),
    ('繼', '继'),
    ('續', '续'),
    ('纖', '纤'),
    ('罷', '罢'),
    ('羅', '罗'),
    ('聯', '联'),
    ('聰', '聪'),
    ('職', '职'),
    ('聞', '闻'),
    ('肅', '肃'),
    ('膚', '肤'),
    ('腦', '脑'),
    ('腸', '肠'),
    ('膠', '胶'),
    ('臉', '脸'),
    ('膽', '胆'),
    ('臟', '脏'),
    ('臺', '台'),
    ('艦', '舰'),
    ('艷', '艳'),
    ('節', '节'),
    ('萊', '莱'),
    ('蓋', '盖'),
    ('蓮', '莲'),
    ('蔣', '蒋'),
    ('藍', '蓝'),
    ('藝', '艺'),
    ('藥', '药'),
    ('蘇', '苏'),
    ('蘋', '苹'),
    ('蟲', '虫'),
    ('蝦', '虾'),
    ('蟬', '蝉'),
    ('蠻', '蛮'),
    ('術', '术'),
    ('衝', '冲'),
    ('補', '补'),
    ('裝', '装'),
    ('裡', '里'),
    ('裏', '里'),
    ('製', '制'),
    ('褲', '裤'),
    ('襯', '衬'),
    ('見', '见'),
    ('規', '规'),
    ('視', '视'),
    ('覺', '觉'),
    ('覽', '览'),
    ('觀', '观'),
    ('計', '计'),
    ('訂', '订'),
    ('認', '认'),
    ('討', '讨'),
    ('訓', '训'),
    ('記', '记'),
    ('講', '讲'),
    ('許', '许'),
    ('論', '论'),
    ('設', '设'),
    ('訪', '访'),
    ('評', '评'),
    ('識', '识'),
    ('詞', '词'),
    ('譯', '译'),
    ('試', '试'),
    ('詩', '诗'),
    ('話', '话'),
    ('該', '该'),
    ('詳', '详'),
    ('語', '语'),
    ('誤', '误'),
    ('說', '说'),
    ('誰', '谁'),
    ('課', '课'),
    ('調', '调'),
    ('談', '谈'),
    ('請', '请'),
    ('諸', '诸'),
    ('謀', '谋'),
    ('謝', '谢'),
    ('謹', '谨'),
    ('證', '证'),
    ('譜', '谱'),
    ('議', '议'),
    ('讀', '读'),
    ('讓', '让'),
    ('貝', '贝'),
    ('貞', '贞'),
    ('負', '负'),
    ('財', '财'),
    ('貢', '贡'),
    ('貧', '贫'),
    ('貨', '货'),
    ('販', '贩'),
    ('貪', '贪'),
    ('貫', '贯'),
    ('責', '责'),
    ('貴', '贵'),
    ('費', '费'),
    ('賀', '贺'),
    ('資', '资'),
    ('賊', '贼'),
    ('質', '质'),
    ('賬', '账'),
    ('購', '购'),
    ('贏', '赢'),
    ('贊', '赞'),
    ('趕', '赶'),
    ('趙', '赵'),
    ('跡', '迹'),
    ('踐', '践'),
    ('車', '车'),
    ('軌', '轨'),
    ('軟', '软'),
    ('較', '较'),
    ('載', '载'),
    ('輔', '辅'),
    ('輕', '轻'),
    ('輛', '辆'),
    ('輸', '输'),
    ('轉', '转'),
    ('轟', '轰'),
    ('辭', '辞'),
    ('邊', '边'),
    ('達', '达'),
    ('遷', '迁'),
    ('過', '过'),
    ('運', '运'),
    ('還', '还'),
    ('這', '这'),
    ('進', '进'),
    ('遠', '远'),
    ('違', '违'),
    ('連', '连'),
    ('遲', '迟'),
    ('適', '适'),
    ('選', '选'),
    ('遺', '遗'),
    ('郵', '邮'),
    ('鄭', '郑'),
    ('醜', '丑'),
    ('釋', '释'),
    ('針', '针'),
    ('釘', '钉'),
    ('鈔', '钞'),
    ('鈴', '铃'),
    ('鉛', '铅'),
    ('銀', '银'),
    ('銅', '铜'),
    ('銜', '衔'),
    ('銳', '锐'),
    ('鋒', '锋'),
    ('鋼', '钢'),
    ('錢', '钱'),
    ('錦', '锦'),
    ('錯', '错'),
    ('鍋', '锅'),
    ('鍵', '键'),
    ('鎮', '镇'),
    ('鏡', '镜'),
    ('鐘', '钟'),
    ('鐵', '铁'),
    ('鑄', '铸'),
    ('長', '长'),
    ('門', '门'),
    ('閃', '闪'),
    ('閉', '闭'),
    ('間', '间'),
    ('閱', '阅'),
    ('闊', '阔'),
    ('陽', '阳'),
    ('陰', '阴'),
    ('陳', '陈'),
    ('陸', '陆'),
    ('際', '际'),
    ('隨', '随'),
    ('隱', '隐'),
    ('雖', '虽'),
    ('難', '难'),
    ('雞', '鸡'),
    ('離', '离'),
    ('霧', '雾'),
    ('靈', '灵'),
    ('靜', '静'),
    ('韋', '韦'),
    ('頁', '页'),
    ('頂', '顶'),
    ('項', '项'),
    ('順', '顺'),
    ('須', '须'),
    ('預', '预'),
    ('領', '领'),
    ('頻', '频'),
    ('題', '题'),
    ('額', '额'),
    ('願', '愿'),
    ('顧', '顾'),
    ('風', '风'),
    ('飛', '飞'),
    ('飯', '饭'),
    ('飲', '饮'),
    ('飾', '饰'),
    ('餃', '饺'),
    ('餅', '饼'),
    ('館', '馆'),
    ('馬', '马'),
    ('駐', '驻'),
    ('駕', '驾'),
    ('騎', '骑'),
    ('騙', '骗'),
    ('驗', '验'),
    ('驚', '惊'),
    ('髒', '脏'),
    ('髮', '发'),
    ('鬥', '斗'),
    ('魚', '鱼'),
    ('鮮', '鲜'),
    ('鳥', '鸟'),
    ('鴨', '鸭'),
    ('鴻', '鸿'),
    ('鵝', '鹅'),
    ('鹽', '盐'),
    ('麥', '麦'),
    ('麼', '么'),
    ('黃', '黄'),
    ('齒', '齿'),
    ('齡', '龄'),
    ('龍', '龙'),
    ('龜', '龟'),
];
